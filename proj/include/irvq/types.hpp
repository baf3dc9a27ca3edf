#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace irvq {

// All bulk data is row-major float32: one vector per row. Row-major keeps
// single vectors contiguous, which is what the encoders and the binary file
// formats want.
using MatrixRMf = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixRMd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// n x M stage codes, one byte per stage (codebooks are capped at 256 entries).
using CodeMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Neighbor index lists, one query per row.
using IndexMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Dataset = MatrixRMf;

}  // namespace irvq
