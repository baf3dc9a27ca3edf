#include "irvq/clustering.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "irvq/parallel.hpp"
#include "irvq/rng.hpp"

namespace irvq {
namespace {

constexpr Eigen::Index kRowChunk = 2048;  // E-step GEMM block

struct AssignState {
  std::vector<std::int32_t> assign;
  Eigen::VectorXf dist;  // squared distance to the assigned centroid
  double mean_distortion = 0;
};

// Nearest centroid per point through the expansion
//   ||x - c||^2 = ||x||^2 + ||c||^2 - 2 x.c
// with the x.c block computed as one GEMM per fixed-size row chunk. The
// chunking is independent of the thread count, so results are too.
void assign_step(const Eigen::Ref<const MatrixRMf>& points, const MatrixRMf& centroids,
                 const Eigen::VectorXf& point_sqnorms, int threads, AssignState& out) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centroids.rows();
  const Eigen::VectorXf centroid_sqnorms = centroids.rowwise().squaredNorm();

  out.assign.resize(static_cast<std::size_t>(n));
  out.dist.resize(n);

  parallel_blocks(n, kRowChunk, threads, [&](Eigen::Index b0, Eigen::Index b1) {
    MatrixRMf dots = points.middleRows(b0, b1 - b0) * centroids.transpose();
    for (Eigen::Index i = b0; i < b1; ++i) {
      const float* row = dots.row(i - b0).data();
      int best = 0;
      float best_score = centroid_sqnorms[0] - 2.0f * row[0];
      for (Eigen::Index c = 1; c < k; ++c) {
        const float score = centroid_sqnorms[c] - 2.0f * row[c];
        if (score < best_score) {  // strict: ties stay with the lower index
          best_score = score;
          best = static_cast<int>(c);
        }
      }
      out.assign[static_cast<std::size_t>(i)] = best;
      out.dist[i] = std::max(0.0f, point_sqnorms[i] + best_score);
    }
  });

  double total = 0;  // serial, fixed order
  for (Eigen::Index i = 0; i < n; ++i) total += out.dist[i];
  out.mean_distortion = total / static_cast<double>(n);
}

// Cluster means in double, serial accumulation. Returns per-cluster counts.
std::vector<Eigen::Index> update_step(const Eigen::Ref<const MatrixRMf>& points,
                                      const std::vector<std::int32_t>& assign,
                                      MatrixRMf& centroids) {
  const Eigen::Index k = centroids.rows();
  MatrixRMd sums = MatrixRMd::Zero(k, points.cols());
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const auto c = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
    sums.row(static_cast<Eigen::Index>(c)) += points.row(i).cast<double>();
    ++counts[c];
  }
  for (Eigen::Index c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0)
      centroids.row(c) =
          (sums.row(c) / static_cast<double>(counts[static_cast<std::size_t>(c)])).cast<float>();
    // empty clusters keep their previous position until repaired
  }
  return counts;
}

// Move each empty centroid onto the point farthest from its assigned
// centroid, one distinct point per empty cluster.
void repair_empties(const Eigen::Ref<const MatrixRMf>& points, const AssignState& state,
                    const std::vector<Eigen::Index>& counts, MatrixRMf& centroids) {
  Eigen::VectorXf remaining = state.dist;
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Eigen::Index farthest = 0;
    float far_dist = -1.0f;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      if (remaining[i] > far_dist) {
        far_dist = remaining[i];
        farthest = i;
      }
    }
    if (far_dist <= 0.0f) break;  // no distinct point left to donate
    centroids.row(c) = points.row(farthest);
    remaining[farthest] = -1.0f;
  }
}

KmeansResult run_lloyd(const Eigen::Ref<const MatrixRMf>& points, MatrixRMf centroids,
                       const KmeansOptions& opts) {
  const Eigen::Index n = points.rows();
  const Eigen::VectorXf point_sqnorms = points.rowwise().squaredNorm();

  KmeansResult res;
  AssignState state;
  assign_step(points, centroids, point_sqnorms, opts.threads, state);
  res.history.push_back(state.mean_distortion);

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    std::vector<Eigen::Index> counts = update_step(points, state.assign, centroids);
    if (std::find(counts.begin(), counts.end(), Eigen::Index{0}) != counts.end()) {
      repair_empties(points, state, counts, centroids);
      // recompute once so the moved centroid owns a cluster before we continue
      assign_step(points, centroids, point_sqnorms, opts.threads, state);
      update_step(points, state.assign, centroids);
    }
    assign_step(points, centroids, point_sqnorms, opts.threads, state);
    res.history.push_back(state.mean_distortion);
    res.iterations = iter + 1;
    const double prev = res.history[res.history.size() - 2];
    const double cur = res.history.back();
    if (std::abs(prev - cur) <= static_cast<double>(opts.tol) * std::max(prev, 1e-30)) break;
  }

  res.centroids = std::move(centroids);
  res.assignments = std::move(state.assign);
  res.distortion = state.mean_distortion;
  return res;
}

// k-means++: first center uniform, each next drawn with probability
// proportional to the squared distance to the nearest chosen center. The
// cumulative-weight walk uses plain doubles and uniform01 so the sequence of
// picks is implementation-independent.
MatrixRMf seed_plusplus(const Eigen::Ref<const MatrixRMf>& points, int k, std::uint64_t seed) {
  const Eigen::Index n = points.rows();
  std::mt19937_64 rng(seed);
  MatrixRMf centroids(k, points.cols());

  const auto first = static_cast<Eigen::Index>(bounded(rng, static_cast<std::uint64_t>(n)));
  centroids.row(0) = points.row(first);

  Eigen::VectorXf best = (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) total += std::max(0.0f, best[i]);
    Eigen::Index pick;
    if (total > 0) {
      const double target = uniform01(rng) * total;
      double cum = 0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        cum += std::max(0.0f, best[i]);
        if (cum > target) {
          pick = i;
          break;
        }
      }
    } else {
      // all remaining mass is zero (duplicates of chosen centers)
      pick = static_cast<Eigen::Index>(bounded(rng, static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(pick);
    best = best.cwiseMin((points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }
  return centroids;
}

}  // namespace

KmeansResult kmeans(const Eigen::Ref<const MatrixRMf>& points, int k, const KmeansOptions& opts) {
  if (k <= 0 || k > points.rows())
    throw std::invalid_argument("kmeans: k " + std::to_string(k) + " out of range for " +
                                std::to_string(points.rows()) + " points");
  return run_lloyd(points, seed_plusplus(points, k, opts.seed), opts);
}

KmeansResult kmeans(const Eigen::Ref<const MatrixRMf>& points,
                    const Eigen::Ref<const MatrixRMf>& init, const KmeansOptions& opts) {
  if (init.cols() != points.cols())
    throw std::invalid_argument("kmeans: init dim " + std::to_string(init.cols()) +
                                " != points dim " + std::to_string(points.cols()));
  if (init.rows() <= 0 || init.rows() > points.rows())
    throw std::invalid_argument("kmeans: init has " + std::to_string(init.rows()) +
                                " centroids for " + std::to_string(points.rows()) + " points");
  return run_lloyd(points, init, opts);
}

PcaBasis pca(const Eigen::Ref<const MatrixRMf>& points) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 2) throw std::invalid_argument("pca: need at least 2 points");

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < n; ++i) mean += points.row(i).cast<double>();
  mean /= static_cast<double>(n);

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (Eigen::Index b0 = 0; b0 < n; b0 += kRowChunk) {
    const Eigen::Index rows = std::min(kRowChunk, n - b0);
    Eigen::MatrixXd centered =
        points.middleRows(b0, rows).cast<double>().rowwise() - mean.transpose();
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= static_cast<double>(n - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw std::runtime_error("pca: eigensolver failed");

  // Eigen orders eigenvalues ascending; we want the largest variance first.
  PcaBasis basis;
  basis.components.resize(d, d);
  basis.variances.resize(d);
  for (Eigen::Index p = 0; p < d; ++p) {
    basis.components.row(p) = solver.eigenvectors().col(d - 1 - p).cast<float>();
    basis.variances[p] = static_cast<float>(std::max(0.0, solver.eigenvalues()[d - 1 - p]));
  }
  basis.mean = mean.cast<float>();
  return basis;
}

MatrixRMf project(const PcaBasis& basis, const Eigen::Ref<const MatrixRMf>& points,
                  Eigen::Index top) {
  if (points.cols() != basis.dim())
    throw std::invalid_argument("project: points dim " + std::to_string(points.cols()) +
                                " != basis dim " + std::to_string(basis.dim()));
  if (top < 1 || top > basis.dim())
    throw std::invalid_argument("project: top " + std::to_string(top) +
                                " outside [1, " + std::to_string(basis.dim()) + "]");
  return points * basis.components.topRows(top).transpose();
}

MatrixRMf pad_and_lift(const PcaBasis& basis, const Eigen::Ref<const MatrixRMf>& centroids,
                       Eigen::Index full_d) {
  if (full_d < 1 || full_d > basis.dim())
    throw std::invalid_argument("pad_and_lift: full_d " + std::to_string(full_d) +
                                " outside [1, " + std::to_string(basis.dim()) + "]");
  if (centroids.cols() > full_d)
    throw std::invalid_argument("pad_and_lift: centroid dim " + std::to_string(centroids.cols()) +
                                " exceeds full_d " + std::to_string(full_d));
  // Zero padding adds coordinates on axes [cols, full_d), which contribute
  // nothing to the rotation back, so only the leading rows matter.
  return centroids * basis.components.topRows(centroids.cols());
}

}  // namespace irvq
