#include "irvq/encode.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "irvq/parallel.hpp"

namespace irvq {
namespace {

struct PoolEntry {
  double score;
  std::int32_t parent;
  std::int32_t code;
};

// Lexicographic order of the full extended sequences (parent prefix, then new
// code). Only consulted on exact score ties.
bool lex_less(const CandidateList& prev, const PoolEntry& a, const PoolEntry& b) {
  const auto pa = prev.codes_of(a.parent);
  const auto pb = prev.codes_of(b.parent);
  for (int j = 0; j < prev.stages; ++j) {
    if (pa[static_cast<std::size_t>(j)] != pb[static_cast<std::size_t>(j)])
      return pa[static_cast<std::size_t>(j)] < pb[static_cast<std::size_t>(j)];
  }
  return a.code < b.code;
}

bool same_sequence(const CandidateList& prev, const PoolEntry& a, const PoolEntry& b) {
  if (a.code != b.code) return false;
  if (a.parent == b.parent) return true;
  const auto pa = prev.codes_of(a.parent);
  const auto pb = prev.codes_of(b.parent);
  return std::equal(pa.begin(), pa.end(), pb.begin());
}

void emit(const CandidateList& prev, const std::vector<PoolEntry>& picked, CandidateList& next) {
  next.width = prev.width;
  next.x_sqnorm = prev.x_sqnorm;
  next.stages = prev.stages + 1;
  next.count = static_cast<int>(picked.size());
  next.codes.resize(picked.size() * static_cast<std::size_t>(next.stages));
  next.errors.resize(picked.size());
  for (std::size_t i = 0; i < picked.size(); ++i) {
    std::uint8_t* dst = next.codes.data() + i * static_cast<std::size_t>(next.stages);
    const auto src = prev.codes_of(picked[i].parent);
    if (prev.stages > 0) std::memcpy(dst, src.data(), static_cast<std::size_t>(prev.stages));
    dst[prev.stages] = static_cast<std::uint8_t>(picked[i].code);
    next.errors[i] = picked[i].score;
  }
}

}  // namespace

namespace detail {

void extend_with_distances(const CandidateList& prev, const float* dist_row,
                           const CodebookSet& books, int stage, CandidateList& next) {
  const int k = books.codewords();
  const int m = prev.stages;

  thread_local std::vector<PoolEntry> pool;
  thread_local std::vector<double> lookup;
  pool.clear();
  pool.resize(static_cast<std::size_t>(prev.count) * static_cast<std::size_t>(k));
  lookup.assign(static_cast<std::size_t>(k), 0.0);

  for (int l = 0; l < prev.count; ++l) {
    const auto codes = prev.codes_of(l);
    // c_stage(j) . recon(candidate l), resolved entirely from the tables
    std::fill(lookup.begin(), lookup.end(), 0.0);
    for (int a = 0; a < m; ++a) {
      const float* row = books.cross(a, stage).row(codes[static_cast<std::size_t>(a)]).data();
      for (int j = 0; j < k; ++j) lookup[static_cast<std::size_t>(j)] += row[j];
    }
    // (err - ||x||^2) vanishes exactly for the root candidate, so the first
    // stage scores are the plain distances.
    const double base = prev.errors[static_cast<std::size_t>(l)] - prev.x_sqnorm;
    PoolEntry* out = pool.data() + static_cast<std::size_t>(l) * static_cast<std::size_t>(k);
    for (int j = 0; j < k; ++j)
      out[j] = {base + (static_cast<double>(dist_row[j]) + 2.0 * lookup[static_cast<std::size_t>(j)]),
                l, j};
  }

  const auto better = [&](const PoolEntry& a, const PoolEntry& b) {
    if (a.score != b.score) return a.score < b.score;
    return lex_less(prev, a, b);
  };

  const std::size_t take =
      std::min(pool.size(), static_cast<std::size_t>(std::max(1, prev.width)));
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take), pool.end(),
                    better);

  std::vector<PoolEntry> picked(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(take));
  bool dupes = false;
  for (std::size_t i = 1; i < picked.size() && !dupes; ++i)
    dupes = same_sequence(prev, picked[i - 1], picked[i]);
  if (dupes) {
    // Only reachable when the input beam itself carries duplicate sequences;
    // fall back to a full sort and keep the lexicographically smallest of
    // each tie group.
    std::sort(pool.begin(), pool.end(), better);
    picked.clear();
    for (const auto& e : pool) {
      if (!picked.empty() && same_sequence(prev, picked.back(), e)) continue;
      picked.push_back(e);
      if (picked.size() == take) break;
    }
  }

  emit(prev, picked, next);
}

}  // namespace detail

CandidateList make_candidates(const Eigen::Ref<const Eigen::VectorXf>& x, int width) {
  if (width < 1) throw std::invalid_argument("make_candidates: width must be positive");
  CandidateList root;
  root.width = width;
  root.x_sqnorm = static_cast<double>(x.squaredNorm());
  root.stages = 0;
  root.count = 1;
  root.errors.assign(1, root.x_sqnorm);
  return root;
}

CandidateList extend_candidates(const CandidateList& prev,
                                const Eigen::Ref<const Eigen::VectorXf>& x,
                                const CodebookSet& books, int stage) {
  if (stage != prev.stages || stage >= books.stages())
    throw std::invalid_argument("extend_candidates: stage " + std::to_string(stage) +
                                " does not follow a " + std::to_string(prev.stages) +
                                "-stage beam");
  if (x.size() != books.dim())
    throw std::invalid_argument("extend_candidates: vector dim mismatch");
  const Eigen::VectorXf dist =
      (books.books[static_cast<std::size_t>(stage)].rowwise() - x.transpose())
          .rowwise()
          .squaredNorm();
  CandidateList next;
  detail::extend_with_distances(prev, dist.data(), books, stage, next);
  return next;
}

std::pair<Encoding, CandidateList> encode_multipath(const Eigen::Ref<const Eigen::VectorXf>& x,
                                                    const CodebookSet& books, int L) {
  if (books.stages() == 0) throw std::invalid_argument("encode_multipath: empty codebook set");
  CandidateList beam = make_candidates(x, L);
  for (int m = 0; m < books.stages(); ++m) beam = extend_candidates(beam, x, books, m);
  Encoding enc;
  const auto best = beam.codes_of(0);
  enc.codes.assign(best.begin(), best.end());
  enc.epsilon = books.epsilon(enc.codes);
  return {std::move(enc), std::move(beam)};
}

Encoding encode_sequential(const Eigen::Ref<const Eigen::VectorXf>& x, const CodebookSet& books) {
  return encode_multipath(x, books, 1).first;
}

void extend_database_stage(const Eigen::Ref<const MatrixRMf>& data, const CodebookSet& books,
                           int stage, std::vector<CandidateList>& lists, int threads) {
  if (lists.size() != static_cast<std::size_t>(data.rows()))
    throw std::invalid_argument("extend_database_stage: one beam per row required");
  const MatrixRMf& book = books.books[static_cast<std::size_t>(stage)];
  const Eigen::VectorXf codeword_sqnorms = book.rowwise().squaredNorm();
  constexpr Eigen::Index kChunk = 1024;

  parallel_blocks(data.rows(), kChunk, threads, [&](Eigen::Index b0, Eigen::Index b1) {
    MatrixRMf dots = data.middleRows(b0, b1 - b0) * book.transpose();
    Eigen::RowVectorXf dist(book.rows());
    CandidateList next;
    for (Eigen::Index i = b0; i < b1; ++i) {
      const float xsq = data.row(i).squaredNorm();
      dist = (codeword_sqnorms.transpose() - 2.0f * dots.row(i - b0)).array() + xsq;
      dist = dist.cwiseMax(0.0f);
      detail::extend_with_distances(lists[static_cast<std::size_t>(i)], dist.data(), books, stage,
                                    next);
      lists[static_cast<std::size_t>(i)] = std::move(next);
    }
  });
}

}  // namespace irvq
