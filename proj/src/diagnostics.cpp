#include "irvq/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace irvq {
namespace {

void check_codes(const Eigen::Ref<const CodeMatrix>& codes, int K) {
  if (codes.rows() == 0 || codes.cols() == 0)
    throw std::invalid_argument("diagnostics: empty code matrix");
  if (K < 1 || K > 256) throw std::invalid_argument("diagnostics: K out of range");
  if (static_cast<int>(codes.maxCoeff()) >= K)
    throw std::invalid_argument("diagnostics: code out of range for K=" + std::to_string(K));
}

}  // namespace

std::vector<double> entropy_per_stage(const Eigen::Ref<const CodeMatrix>& codes, int K) {
  check_codes(codes, K);
  const Eigen::Index n = codes.rows();
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(codes.cols()));
  std::vector<Eigen::Index> counts(static_cast<std::size_t>(K));
  for (Eigen::Index m = 0; m < codes.cols(); ++m) {
    std::fill(counts.begin(), counts.end(), Eigen::Index{0});
    for (Eigen::Index i = 0; i < n; ++i) ++counts[codes(i, m)];
    double h = 0;
    for (const Eigen::Index c : counts) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(n);
      h -= p * std::log2(p);
    }
    out.push_back(h);
  }
  return out;
}

Eigen::MatrixXd mutual_information(const Eigen::Ref<const CodeMatrix>& codes, int K) {
  check_codes(codes, K);
  const Eigen::Index n = codes.rows();
  const Eigen::Index m = codes.cols();
  const double dn = static_cast<double>(n);

  Eigen::MatrixXd joint(K, K);
  Eigen::MatrixXd mi(m, m);
  std::vector<double> pa(static_cast<std::size_t>(K)), pb(static_cast<std::size_t>(K));
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      joint.setZero();
      for (Eigen::Index i = 0; i < n; ++i) joint(codes(i, a), codes(i, b)) += 1.0;
      joint /= dn;
      for (int k = 0; k < K; ++k) {
        pa[static_cast<std::size_t>(k)] = joint.row(k).sum();
        pb[static_cast<std::size_t>(k)] = joint.col(k).sum();
      }
      double acc = 0;
      for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
          const double p = joint(i, j);
          if (p > 0)
            acc += p * std::log2(p / (pa[static_cast<std::size_t>(i)] *
                                      pb[static_cast<std::size_t>(j)]));
        }
      // clamp float-rounding negatives: empirical MI is a KL divergence
      acc = std::max(0.0, acc);
      mi(a, b) = acc;
      mi(b, a) = acc;
    }
  }
  return mi;
}

double quantization_error(const Eigen::Ref<const MatrixRMf>& data, const CodebookSet& books,
                          const Eigen::Ref<const CodeMatrix>& codes) {
  return per_stage_quantization_error(data, books, codes).back();
}

std::vector<double> per_stage_quantization_error(const Eigen::Ref<const MatrixRMf>& data,
                                                 const CodebookSet& books,
                                                 const Eigen::Ref<const CodeMatrix>& codes) {
  check_codes(codes, std::max(1, books.codewords()));
  if (codes.rows() != data.rows())
    throw std::invalid_argument("quantization_error: one code row per data row required");
  if (codes.cols() != books.stages())
    throw std::invalid_argument("quantization_error: one code per stage required");
  if (data.cols() != books.dim())
    throw std::invalid_argument("quantization_error: dimension mismatch");

  const Eigen::Index n = data.rows();
  std::vector<double> acc(static_cast<std::size_t>(books.stages()), 0.0);
  Eigen::RowVectorXf residual(data.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    residual = data.row(i);
    for (int s = 0; s < books.stages(); ++s) {
      residual -= books.books[static_cast<std::size_t>(s)].row(codes(i, s));
      acc[static_cast<std::size_t>(s)] += static_cast<double>(residual.squaredNorm());
    }
  }
  for (auto& a : acc) a /= static_cast<double>(n);
  return acc;
}

std::map<int, double> recall_at_r(const IndexMatrix& results, const GroundTruth& gt,
                                  const std::vector<int>& r_values) {
  if (results.rows() != gt.indices.rows())
    throw std::invalid_argument("recall_at_r: result rows != ground-truth rows");
  if (gt.indices.cols() < 1) throw std::invalid_argument("recall_at_r: empty ground truth");
  const Eigen::Index nq = results.rows();

  std::map<int, double> out;
  for (const int r : r_values) {
    if (r < 1 || r > results.cols())
      throw std::invalid_argument("recall_at_r: R " + std::to_string(r) +
                                  " exceeds result depth " + std::to_string(results.cols()));
    Eigen::Index hits = 0;
    for (Eigen::Index q = 0; q < nq; ++q) {
      const std::int32_t truth = gt.indices(q, 0);
      for (int j = 0; j < r; ++j) {
        if (results(q, j) == truth) {
          ++hits;
          break;
        }
      }
    }
    out[r] = static_cast<double>(hits) / static_cast<double>(nq);
  }
  return out;
}

void write_report(std::ostream& out, const EvalReport& report) {
  const auto line = [&out](const char* name, const std::string& params, double value) {
    out << name;
    if (!params.empty()) out << ' ' << params;
    out << " value=" << value << '\n';
  };
  out.precision(6);
  out << std::fixed;
  for (const auto& [r, v] : report.recall) line("recall", "R=" + std::to_string(r), v);
  for (std::size_t s = 0; s < report.per_stage_distortion.size(); ++s)
    line("distortion", "stage=" + std::to_string(s + 1), report.per_stage_distortion[s]);
  for (std::size_t s = 0; s < report.entropy_bits.size(); ++s)
    line("entropy_bits", "stage=" + std::to_string(s + 1), report.entropy_bits[s]);
  for (Eigen::Index a = 0; a < report.mutual_info_bits.rows(); ++a)
    for (Eigen::Index b = a + 1; b < report.mutual_info_bits.cols(); ++b)
      line("mi_bits", "a=" + std::to_string(a + 1) + " b=" + std::to_string(b + 1),
           report.mutual_info_bits(a, b));
  if (report.queries > 0) {
    line("timing", "name=table_build_us_per_query", report.table_build_us_per_query);
    line("timing", "name=scan_us_per_query", report.scan_us_per_query);
    line("size", "name=queries", static_cast<double>(report.queries));
    line("size", "name=database", static_cast<double>(report.database_size));
  }
}

}  // namespace irvq
