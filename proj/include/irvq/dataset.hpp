#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "irvq/types.hpp"

namespace irvq {

struct GroundTruth {
  IndexMatrix indices;   // nq x k, ascending distance, ties by lower index
  MatrixRMf distances;   // same shape; empty when loaded from an index file
};

// Readers for the usual packed vector files: every record is a little-endian
// int32 dimensionality followed by the components. fvecs stores float32
// components, bvecs stores uint8 components which are widened to float.
// Malformed input (dimension mismatch between records, truncation, a
// non-finite float, no records at all) raises std::runtime_error naming the
// byte offset of the problem.
Dataset load_fvecs(const std::string& path);
Dataset load_bvecs(const std::string& path);
void save_fvecs(const std::string& path, const Eigen::Ref<const MatrixRMf>& data);

// Neighbor-index files use the same record layout with int32 components.
void save_ivecs(const std::string& path, const IndexMatrix& indices);
IndexMatrix load_ivecs(const std::string& path);

// Seeded Fisher-Yates shuffle (mt19937_64 + unbiased bounded draws), then a
// split into the first train_n rows and the rest. Together the two halves are
// a permutation of the input; same seed, same split.
std::pair<Dataset, Dataset> split(const Eigen::Ref<const MatrixRMf>& data,
                                  Eigen::Index train_n, std::uint64_t seed);

// Brute-force k nearest neighbors under squared Euclidean distance. Rows of
// the result are sorted by (distance, index); ties break toward the lower
// base index.
GroundTruth exact_knn(const Eigen::Ref<const MatrixRMf>& base,
                      const Eigen::Ref<const MatrixRMf>& queries, int k,
                      int threads = 1);

}  // namespace irvq
