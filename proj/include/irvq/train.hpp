#pragma once

#include <cstdint>
#include <vector>

#include "irvq/clustering.hpp"
#include "irvq/codebooks.hpp"
#include "irvq/types.hpp"

namespace irvq {

struct TrainConfig {
  int M = 8;    // stages
  int K = 256;  // codewords per stage, at most 256 (codes are bytes)
  int I = 10;   // dimension-ladder rounds per stage (improved trainer only)
  int L = 30;   // beam width for the re-encoding passes (improved trainer only)
  int kmeans_iters = 100;  // budget for the full-dimension round
  int warm_iters = 100;    // budget for each lower-dimension warm-up round
  float kmeans_tol = 1e-4f;
  std::uint64_t seed = 0;
  int threads = 1;
};

// Subspace sizes ceil(d^(p/I)) for p = 1..I, duplicates collapsed; always
// ends exactly at d.
std::vector<Eigen::Index> dimension_schedule(Eigen::Index d, int I);

// One stage of dimension-laddered codebook learning: rotate the residuals
// onto their principal axes, run k-means on the top ceil(d^(p/I)) coordinates
// for p = 1..I — each round warm-started from the previous round's centroids
// zero-padded into the new axes — then rotate the final centroids back.
// opts.max_iters budgets the full-dimension round and opts.seed feeds the
// k-means++ cold start of the first round; warm_iters budgets the others.
// With a single-round schedule the rotation is skipped outright: k-means is
// rotation-invariant, so this is the same stage at less cost.
MatrixRMf icl_stage(const Eigen::Ref<const MatrixRMf>& residuals, int K, int I,
                    const KmeansOptions& opts, int warm_iters);

struct TrainResult {
  CodebookSet books;
  std::vector<double> distortion;    // mean ||x - reconstruction||^2 after each stage
  std::vector<double> entropy_bits;  // entropy of the stage's code usage on the training set
};

// Plain residual trainer: stage m is k-means on the stage-(m-1) residuals,
// greedy assignment, subtract. Ignores I and L. The k-means++ start of stage
// m is seeded with seed + m.
TrainResult train_rvq(const Eigen::Ref<const MatrixRMf>& train, const TrainConfig& cfg);

// Improved trainer: icl_stage learns each codebook, then every training
// vector is re-encoded over all stages so far with an L-wide beam (the
// per-vector beams persist across stages, so only the new codebook is
// searched). Residuals for the next stage come from the single best
// candidate. Stage seeds follow the same seed + m rule.
TrainResult train_irvq(const Eigen::Ref<const MatrixRMf>& train, const TrainConfig& cfg);

}  // namespace irvq
