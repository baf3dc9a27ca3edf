#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "irvq/codebooks.hpp"
#include "irvq/database.hpp"
#include "irvq/types.hpp"

namespace irvq {

// Per-query lookup tables: tables(m, k) = ||q - c_m(k)||^2.
struct DistanceTables {
  MatrixRMf tables;
  float query_sqnorm = 0;
};

DistanceTables build_tables(const Eigen::Ref<const Eigen::VectorXf>& q, const CodebookSet& books);

// Squared distance between the query and a reconstruction, from codes alone:
//
//   ||q - sum_m c_m||^2 = sum_m ||q - c_m||^2 - (M-1) ||q||^2 + epsilon
//
// with epsilon the stored pairwise-dot constant of the encoding. M table
// lookups, no vector arithmetic.
double adc_distance(const DistanceTables& tables, std::span<const std::uint8_t> codes,
                    float epsilon);

// Scans the whole database with adc_distance and returns the R best indices,
// ascending by (distance, index).
std::vector<std::int32_t> linear_scan(const Eigen::Ref<const Eigen::VectorXf>& q,
                                      const EncodedDatabase& db, const CodebookSet& books, int R);

}  // namespace irvq
