#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "irvq/codebooks.hpp"
#include "irvq/dataset.hpp"
#include "irvq/types.hpp"

namespace irvq {

// Empirical entropy of each stage's code usage, in bits; at most log2(K).
std::vector<double> entropy_per_stage(const Eigen::Ref<const CodeMatrix>& codes, int K);

// M x M matrix of pairwise empirical mutual information between stage codes,
// in bits. Symmetric, non-negative, diagonal equals the stage entropy.
Eigen::MatrixXd mutual_information(const Eigen::Ref<const CodeMatrix>& codes, int K);

// Mean squared reconstruction error of the given encodings.
double quantization_error(const Eigen::Ref<const MatrixRMf>& data, const CodebookSet& books,
                          const Eigen::Ref<const CodeMatrix>& codes);

// Same, truncating the reconstruction after each stage prefix.
std::vector<double> per_stage_quantization_error(const Eigen::Ref<const MatrixRMf>& data,
                                                 const CodebookSet& books,
                                                 const Eigen::Ref<const CodeMatrix>& codes);

// Fraction of queries whose true nearest neighbor (gt column 0) appears in
// the top R returned indices, for each requested R.
std::map<int, double> recall_at_r(const IndexMatrix& results, const GroundTruth& gt,
                                  const std::vector<int>& r_values);

struct EvalReport {
  std::map<int, double> recall;               // R -> recall@R
  std::vector<double> per_stage_distortion;   // optional
  std::vector<double> entropy_bits;           // optional
  Eigen::MatrixXd mutual_info_bits;           // optional (size 0 when absent)
  double table_build_us_per_query = 0;
  double scan_us_per_query = 0;
  Eigen::Index queries = 0;
  Eigen::Index database_size = 0;
};

// One metric per line, space-separated "name key=value ... value=<number>";
// stages are reported 1-based.
void write_report(std::ostream& out, const EvalReport& report);

}  // namespace irvq
