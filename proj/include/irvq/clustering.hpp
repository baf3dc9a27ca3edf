#pragma once

#include <cstdint>
#include <vector>

#include "irvq/types.hpp"

namespace irvq {

struct KmeansOptions {
  int max_iters = 100;
  float tol = 1e-4f;  // stop when relative distortion improvement drops below
  std::uint64_t seed = 0;
  int threads = 1;
};

struct KmeansResult {
  MatrixRMf centroids;                  // k x d
  std::vector<std::int32_t> assignments;  // nearest centroid per point, low index on ties
  double distortion = 0;                // mean squared distance under `assignments`
  std::vector<double> history;          // distortion after init and after every iteration
  int iterations = 0;
};

// Lloyd iterations with k-means++ seeding. Assignments, distortion and
// centroids in the result are mutually consistent (a final assignment pass
// runs after the last update). Empty clusters are repaired by moving the
// centroid onto the point currently farthest from its own centroid, followed
// by one extra assign/update round.
KmeansResult kmeans(const Eigen::Ref<const MatrixRMf>& points, int k,
                    const KmeansOptions& opts = {});

// Same iteration, warm-started from the given centroids (seed is not used).
KmeansResult kmeans(const Eigen::Ref<const MatrixRMf>& points,
                    const Eigen::Ref<const MatrixRMf>& init,
                    const KmeansOptions& opts = {});

struct PcaBasis {
  MatrixRMf components;     // d x d orthonormal, row p = axis with p-th largest variance
  Eigen::VectorXf mean;     // used for the covariance only, never subtracted from data
  Eigen::VectorXf variances;  // non-increasing, clamped at zero
  Eigen::Index dim() const { return components.rows(); }
};

// Principal axes of the covariance (computed in double, symmetric
// eigensolve). Rank-deficient directions come back as an arbitrary
// orthonormal completion with zero variance.
PcaBasis pca(const Eigen::Ref<const MatrixRMf>& points);

// Coordinates of each row in the first `top` principal axes. Deliberately no
// mean subtraction: the transform must stay a pure rotation so squared
// distances carry over.
MatrixRMf project(const PcaBasis& basis, const Eigen::Ref<const MatrixRMf>& points,
                  Eigen::Index top);

// Inverse of `project` for vectors living in a leading subspace: zero-pad the
// coordinates to full_d axes and rotate back to the original space.
MatrixRMf pad_and_lift(const PcaBasis& basis, const Eigen::Ref<const MatrixRMf>& centroids,
                       Eigen::Index full_d);

}  // namespace irvq
