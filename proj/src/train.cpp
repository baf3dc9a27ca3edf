#include "irvq/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "irvq/encode.hpp"
#include "irvq/parallel.hpp"

namespace irvq {
namespace {

void validate(const TrainConfig& cfg, Eigen::Index n) {
  if (cfg.M < 1) throw std::invalid_argument("train: M must be at least 1");
  if (cfg.K < 1 || cfg.K > 256)
    throw std::invalid_argument("train: K must be in [1, 256], got " + std::to_string(cfg.K));
  if (n < cfg.K)
    throw std::invalid_argument("train: " + std::to_string(n) + " vectors cannot seed K=" +
                                std::to_string(cfg.K) + " codewords");
  if (cfg.I < 1) throw std::invalid_argument("train: I must be at least 1");
  if (cfg.L < 1) throw std::invalid_argument("train: L must be at least 1");
}

double entropy_bits_from_counts(const std::vector<Eigen::Index>& counts, Eigen::Index n) {
  double h = 0;
  for (const Eigen::Index c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(n);
    h -= p * std::log2(p);
  }
  return h;
}

double mean_row_sqnorm(const MatrixRMf& rows) {
  double acc = 0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i)
    acc += static_cast<double>(rows.row(i).squaredNorm());
  return acc / static_cast<double>(rows.rows());
}

}  // namespace

std::vector<Eigen::Index> dimension_schedule(Eigen::Index d, int I) {
  if (d < 1) throw std::invalid_argument("dimension_schedule: d must be positive");
  if (I < 1) throw std::invalid_argument("dimension_schedule: I must be positive");
  std::vector<Eigen::Index> dims;
  dims.reserve(static_cast<std::size_t>(I));
  for (int p = 1; p <= I; ++p) {
    const double v = std::pow(static_cast<double>(d), static_cast<double>(p) / I);
    // guard against pow landing a hair above an exact integer power
    const double r = std::round(v);
    const double cell = (std::abs(v - r) <= 1e-9 * std::max(1.0, r)) ? r : std::ceil(v);
    dims.push_back(std::clamp<Eigen::Index>(static_cast<Eigen::Index>(cell), 1, d));
  }
  dims.back() = d;
  dims.erase(std::unique(dims.begin(), dims.end()), dims.end());
  return dims;
}

MatrixRMf icl_stage(const Eigen::Ref<const MatrixRMf>& residuals, int K, int I,
                    const KmeansOptions& opts, int warm_iters) {
  if (residuals.rows() < K)
    throw std::invalid_argument("icl_stage: fewer residuals than codewords");
  const Eigen::Index d = residuals.cols();
  const std::vector<Eigen::Index> schedule = dimension_schedule(d, I);

  if (schedule.size() == 1) return kmeans(residuals, K, opts).centroids;

  const PcaBasis basis = pca(residuals);
  const MatrixRMf rotated = project(basis, residuals, d);

  MatrixRMf centroids;
  for (std::size_t round = 0; round < schedule.size(); ++round) {
    const Eigen::Index dp = schedule[round];
    KmeansOptions round_opts = opts;
    if (round + 1 < schedule.size()) round_opts.max_iters = warm_iters;
    if (round == 0) {
      centroids = kmeans(rotated.leftCols(dp), K, round_opts).centroids;
    } else {
      MatrixRMf init = MatrixRMf::Zero(K, dp);
      init.leftCols(centroids.cols()) = centroids;
      centroids = kmeans(rotated.leftCols(dp), init, round_opts).centroids;
    }
  }
  return pad_and_lift(basis, centroids, d);
}

TrainResult train_rvq(const Eigen::Ref<const MatrixRMf>& train, const TrainConfig& cfg) {
  validate(cfg, train.rows());
  const Eigen::Index n = train.rows();

  TrainResult out;
  MatrixRMf residuals = train;
  for (int m = 0; m < cfg.M; ++m) {
    KmeansOptions opts;
    opts.max_iters = cfg.kmeans_iters;
    opts.tol = cfg.kmeans_tol;
    opts.seed = cfg.seed + static_cast<std::uint64_t>(m);
    opts.threads = cfg.threads;
    KmeansResult res = kmeans(residuals, cfg.K, opts);

    std::vector<Eigen::Index> counts(static_cast<std::size_t>(cfg.K), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const std::int32_t c = res.assignments[static_cast<std::size_t>(i)];
      residuals.row(i) -= res.centroids.row(c);
      ++counts[static_cast<std::size_t>(c)];
    }
    out.books.append_book(std::move(res.centroids));
    out.distortion.push_back(res.distortion);
    out.entropy_bits.push_back(entropy_bits_from_counts(counts, n));
  }
  return out;
}

TrainResult train_irvq(const Eigen::Ref<const MatrixRMf>& train, const TrainConfig& cfg) {
  validate(cfg, train.rows());
  const Eigen::Index n = train.rows();

  TrainResult out;
  MatrixRMf residuals = train;
  std::vector<CandidateList> beams(static_cast<std::size_t>(n));
  parallel_blocks(n, 4096, cfg.threads, [&](Eigen::Index b0, Eigen::Index b1) {
    for (Eigen::Index i = b0; i < b1; ++i)
      beams[static_cast<std::size_t>(i)] = make_candidates(train.row(i), cfg.L);
  });

  for (int m = 0; m < cfg.M; ++m) {
    KmeansOptions opts;
    opts.max_iters = cfg.kmeans_iters;
    opts.tol = cfg.kmeans_tol;
    opts.seed = cfg.seed + static_cast<std::uint64_t>(m);
    opts.threads = cfg.threads;
    out.books.append_book(icl_stage(residuals, cfg.K, cfg.I, opts, cfg.warm_iters));

    // Re-encode the training set over stages 0..m, then rebuild residuals
    // from each vector's single best candidate.
    extend_database_stage(train, out.books, m, beams, cfg.threads);
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(cfg.K), 0);
    parallel_blocks(n, 4096, cfg.threads, [&](Eigen::Index b0, Eigen::Index b1) {
      for (Eigen::Index i = b0; i < b1; ++i) {
        const auto best = beams[static_cast<std::size_t>(i)].codes_of(0);
        residuals.row(i) = train.row(i);
        for (int a = 0; a <= m; ++a)
          residuals.row(i) -= out.books.books[static_cast<std::size_t>(a)].row(
              best[static_cast<std::size_t>(a)]);
      }
    });
    for (Eigen::Index i = 0; i < n; ++i)
      ++counts[beams[static_cast<std::size_t>(i)].codes_of(0)[static_cast<std::size_t>(m)]];

    out.distortion.push_back(mean_row_sqnorm(residuals));
    out.entropy_bits.push_back(entropy_bits_from_counts(counts, n));
  }
  return out;
}

}  // namespace irvq
