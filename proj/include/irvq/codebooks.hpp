#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "irvq/types.hpp"

namespace irvq {

// Index of the (a, b) table, a < b, in lexicographic (a, b) order over all
// pairs drawn from M stages.
int cross_pair_index(int a, int b, int M);

// The learned quantizer: one K x d codebook per stage plus the K x K tables
// of inner products between every pair of codebooks. The tables are what let
// the encoder and the distance computation work with codes alone.
struct CodebookSet {
  std::vector<MatrixRMf> books;       // stages entries, each K x d
  std::vector<MatrixRMf> cross_dots;  // cross_dots[cross_pair_index(a,b,M)](i,j) = books[a].row(i) . books[b].row(j)

  int stages() const { return static_cast<int>(books.size()); }
  int codewords() const { return books.empty() ? 0 : static_cast<int>(books.front().rows()); }
  Eigen::Index dim() const { return books.empty() ? 0 : books.front().cols(); }

  const MatrixRMf& cross(int a, int b) const;

  // Appends one stage and fills in its inner-product tables against every
  // earlier stage.
  void append_book(MatrixRMf book);

  // Sum of the selected codewords, one per stage.
  Eigen::RowVectorXf reconstruct(std::span<const std::uint8_t> codes) const;

  // The code-dependent constant needed to turn per-stage distance table sums
  // into a true squared distance: 2 * sum_{a<b} books[a][i_a] . books[b][i_b].
  float epsilon(std::span<const std::uint8_t> codes) const;
};

// Binary persistence. Layout: magic "RVQC", u16 version, u32 d/M/K, the M
// codebooks (K x d float32 each, row-major), then the cross tables in
// lexicographic (a, b) order. Little-endian throughout; byte-exact round
// trip.
void save_codebooks(const std::string& path, const CodebookSet& books);
CodebookSet load_codebooks(const std::string& path);

}  // namespace irvq
