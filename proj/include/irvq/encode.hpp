#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "irvq/codebooks.hpp"
#include "irvq/types.hpp"

namespace irvq {

struct Encoding {
  std::vector<std::uint8_t> codes;  // one codeword index per stage
  float epsilon = 0;                // 2 * sum of pairwise codeword dots, see CodebookSet::epsilon
};

// A beam of partial encodings. Candidates are kept sorted by error ascending,
// ties broken toward the lexicographically smaller code sequence, and the
// sequences are pairwise distinct.
struct CandidateList {
  int width = 1;       // beam capacity L
  double x_sqnorm = 0;  // ||x||^2, computed once and reused by every stage
  int stages = 0;      // codes per candidate so far
  int count = 0;       // live candidates, <= width
  std::vector<std::uint8_t> codes;  // count x stages, row-major
  std::vector<double> errors;       // ||x - reconstruction||^2 per candidate

  std::span<const std::uint8_t> codes_of(int l) const {
    return {codes.data() + static_cast<std::size_t>(l) * static_cast<std::size_t>(stages),
            static_cast<std::size_t>(stages)};
  }
};

// Root beam: a single empty candidate with error ||x||^2.
CandidateList make_candidates(const Eigen::Ref<const Eigen::VectorXf>& x, int width);

// One beam step. Every candidate is extended with every codeword of `stage`;
// the error of an extension never touches x directly:
//
//   err(prev + c) = err(prev) + ||x - c||^2 - ||x||^2 + 2 c . recon(prev)
//
// where c . recon(prev) is a sum of cross_dots lookups. Cost per call is
// O(dK) for the distance row plus O(stage * K * L) for the lookups. The best
// `width` distinct sequences survive.
CandidateList extend_candidates(const CandidateList& prev,
                                const Eigen::Ref<const Eigen::VectorXf>& x,
                                const CodebookSet& books, int stage);

// Greedy one-path encoding: at each stage the codeword nearest the running
// residual. Exactly the beam with width 1.
Encoding encode_sequential(const Eigen::Ref<const Eigen::VectorXf>& x, const CodebookSet& books);

// Beam encoding over all stages; returns the best encoding and the final
// beam. Width 1 degenerates to encode_sequential.
std::pair<Encoding, CandidateList> encode_multipath(const Eigen::Ref<const Eigen::VectorXf>& x,
                                                    const CodebookSet& books, int L);

// Batch version of extend_candidates for one stage across many vectors:
// distance rows come from chunked matrix products instead of per-vector
// arithmetic (same values up to float rounding). lists[i] must hold the beam
// of data.row(i) after `stage` stages. Deterministic for any thread count.
void extend_database_stage(const Eigen::Ref<const MatrixRMf>& data, const CodebookSet& books,
                           int stage, std::vector<CandidateList>& lists, int threads);

namespace detail {
// Shared beam step; dist_row[k] = ||x - c_stage(k)||^2 by any float route.
void extend_with_distances(const CandidateList& prev, const float* dist_row,
                           const CodebookSet& books, int stage, CandidateList& next);
}  // namespace detail

}  // namespace irvq
