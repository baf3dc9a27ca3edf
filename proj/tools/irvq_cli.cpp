// Command-line front end: ground truth, training, encoding, evaluation and
// code diagnostics over fvecs/bvecs datasets. Machine-readable report lines
// go to stdout (or --report FILE); progress goes to stderr.

#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "irvq/dataset.hpp"
#include "irvq/database.hpp"
#include "irvq/diagnostics.hpp"
#include "irvq/encode.hpp"
#include "irvq/parallel.hpp"
#include "irvq/search.hpp"
#include "irvq/train.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

irvq::Dataset load_vectors(const std::string& path) {
  const auto start = Clock::now();
  irvq::Dataset data = path.size() >= 6 && path.substr(path.size() - 6) == ".bvecs"
                           ? irvq::load_bvecs(path)
                           : irvq::load_fvecs(path);
  std::cerr << "loaded " << path << ": " << data.rows() << "x" << data.cols() << " ("
            << seconds_since(start) << "s)\n";
  return data;
}

// Report sink: stdout unless --report names a file.
struct ReportStream {
  explicit ReportStream(const std::string& path) {
    if (!path.empty()) {
      file = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file) throw std::runtime_error(path + ": cannot open for writing");
    }
  }
  std::ostream& get() { return file ? *file : std::cout; }
  std::unique_ptr<std::ofstream> file;
};

struct TrainArgs {
  std::string data, out, rest_out, report;
  std::string method = "irvq";
  irvq::TrainConfig cfg;
  std::int64_t train_n = 0;
};

void run_train(const TrainArgs& args) {
  irvq::Dataset data = load_vectors(args.data);
  irvq::Dataset train;
  if (args.train_n > 0) {
    auto [head, rest] = irvq::split(data, static_cast<Eigen::Index>(args.train_n), args.cfg.seed);
    train = std::move(head);
    if (!args.rest_out.empty()) {
      irvq::save_fvecs(args.rest_out, rest);
      std::cerr << "wrote " << rest.rows() << " held-out vectors to " << args.rest_out << "\n";
    }
  } else {
    train = std::move(data);
  }

  const auto start = Clock::now();
  std::cerr << "training " << args.method << " M=" << args.cfg.M << " K=" << args.cfg.K
            << " on " << train.rows() << "x" << train.cols() << "\n";
  const irvq::TrainResult result = args.method == "rvq" ? irvq::train_rvq(train, args.cfg)
                                                        : irvq::train_irvq(train, args.cfg);
  std::cerr << "trained in " << seconds_since(start) << "s, final distortion "
            << result.distortion.back() << "\n";
  irvq::save_codebooks(args.out, result.books);
  std::cerr << "saved " << args.out << "\n";

  ReportStream report(args.report);
  report.get() << "config method=" << args.method << " M=" << args.cfg.M << " K=" << args.cfg.K
               << " I=" << args.cfg.I << " L=" << args.cfg.L << " seed=" << args.cfg.seed
               << " kmeans_iters=" << args.cfg.kmeans_iters << " warm_iters="
               << args.cfg.warm_iters << " tol=" << args.cfg.kmeans_tol << "\n";
  irvq::EvalReport lines;
  lines.per_stage_distortion = result.distortion;
  lines.entropy_bits = result.entropy_bits;
  irvq::write_report(report.get(), lines);
}

struct EncodeArgs {
  std::string books, data, out, report;
  int L = 30;
  int epsilon_bits = 0;
  int threads = 1;
};

void run_encode(const EncodeArgs& args) {
  const irvq::CodebookSet books = irvq::load_codebooks(args.books);
  const irvq::Dataset data = load_vectors(args.data);
  const auto start = Clock::now();
  const irvq::EncodedDatabase db =
      irvq::encode_database(data, books, args.L, args.epsilon_bits, args.threads);
  std::cerr << "encoded " << db.size() << " vectors in " << seconds_since(start) << "s\n";
  irvq::save_database(args.out, db);
  std::cerr << "saved " << args.out << "\n";

  ReportStream report(args.report);
  report.get() << "config L=" << args.L << " epsilon_bits=" << args.epsilon_bits << "\n";
  irvq::EvalReport lines;
  lines.per_stage_distortion = irvq::per_stage_quantization_error(data, books, db.codes);
  irvq::write_report(report.get(), lines);
}

struct EvalArgs {
  std::string books, db, queries, gt, base, report;
  std::vector<int> r_values = {1, 2, 4, 8, 16, 32, 64, 128};
  int threads = 1;
};

void run_eval(const EvalArgs& args) {
  const irvq::CodebookSet books = irvq::load_codebooks(args.books);
  const irvq::EncodedDatabase db = irvq::load_database(args.db);
  const irvq::Dataset queries = load_vectors(args.queries);

  irvq::GroundTruth gt;
  if (!args.gt.empty()) {
    gt.indices = irvq::load_ivecs(args.gt);
    if (gt.indices.rows() != queries.rows())
      throw std::runtime_error("ground truth rows do not match query count");
  } else if (!args.base.empty()) {
    const irvq::Dataset base = load_vectors(args.base);
    if (base.rows() != db.size())
      throw std::runtime_error("base rows do not match encoded database size");
    const auto start = Clock::now();
    gt = irvq::exact_knn(base, queries, 1, args.threads);
    std::cerr << "computed ground truth in " << seconds_since(start) << "s\n";
  } else {
    throw std::runtime_error("eval needs --gt or --base");
  }

  int r_max = 1;
  for (const int r : args.r_values) r_max = std::max(r_max, r);
  if (r_max > db.size()) throw std::runtime_error("largest R exceeds database size");

  const Eigen::Index nq = queries.rows();
  irvq::IndexMatrix results(nq, r_max);

  // table-build cost measured on its own; the scan timing below includes the
  // same build, which is what a query actually pays
  const auto t0 = Clock::now();
  for (Eigen::Index q = 0; q < nq; ++q) irvq::build_tables(queries.row(q), books);
  const double build_us = seconds_since(t0) * 1e6 / static_cast<double>(nq);

  const auto t1 = Clock::now();
  irvq::parallel_for(nq, args.threads, [&](Eigen::Index begin, Eigen::Index end) {
    for (Eigen::Index q = begin; q < end; ++q) {
      const std::vector<std::int32_t> top = irvq::linear_scan(queries.row(q), db, books, r_max);
      for (int j = 0; j < r_max; ++j) results(q, j) = top[static_cast<std::size_t>(j)];
    }
  });
  const double scan_us = seconds_since(t1) * 1e6 / static_cast<double>(nq);
  std::cerr << "scanned " << nq << " queries x " << db.size() << " entries, " << scan_us
            << "us/query\n";

  irvq::EvalReport report;
  report.recall = irvq::recall_at_r(results, gt, args.r_values);
  report.entropy_bits = irvq::entropy_per_stage(db.codes, db.codewords);
  report.mutual_info_bits = irvq::mutual_information(db.codes, db.codewords);
  report.table_build_us_per_query = build_us;
  report.scan_us_per_query = scan_us;
  report.queries = nq;
  report.database_size = db.size();

  ReportStream sink(args.report);
  irvq::write_report(sink.get(), report);
}

struct DiagArgs {
  std::string books, db, data, report;
};

void run_diag(const DiagArgs& args) {
  const irvq::CodebookSet books = irvq::load_codebooks(args.books);
  const irvq::EncodedDatabase db = irvq::load_database(args.db);

  irvq::EvalReport report;
  report.entropy_bits = irvq::entropy_per_stage(db.codes, db.codewords);
  report.mutual_info_bits = irvq::mutual_information(db.codes, db.codewords);
  if (!args.data.empty()) {
    const irvq::Dataset data = load_vectors(args.data);
    if (data.rows() != db.size())
      throw std::runtime_error("data rows do not match encoded database size");
    report.per_stage_distortion = irvq::per_stage_quantization_error(data, books, db.codes);
  }
  ReportStream sink(args.report);
  irvq::write_report(sink.get(), report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"residual quantization toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI file");

  // gt
  std::string gt_base, gt_queries, gt_out;
  int gt_k = 100;
  int gt_threads = irvq::default_threads();
  CLI::App* gt = app.add_subcommand("gt", "exact ground truth for a query set");
  gt->add_option("--base", gt_base, "base vectors (.fvecs/.bvecs)")->required();
  gt->add_option("--queries", gt_queries, "query vectors")->required();
  gt->add_option("--k", gt_k, "neighbors per query")->check(CLI::PositiveNumber);
  gt->add_option("--out", gt_out, "output .ivecs path")->required();
  gt->add_option("--threads", gt_threads, "worker threads");

  // train
  TrainArgs train;
  train.cfg.threads = irvq::default_threads();
  CLI::App* tr = app.add_subcommand("train", "learn a codebook set");
  tr->add_option("--data", train.data, "training vectors")->required();
  tr->add_option("--method", train.method, "rvq or irvq")
      ->check(CLI::IsMember({"rvq", "irvq"}));
  tr->add_option("--M", train.cfg.M, "stages")->check(CLI::Range(1, 64));
  tr->add_option("--K", train.cfg.K, "codewords per stage")->check(CLI::Range(1, 256));
  tr->add_option("--I", train.cfg.I, "dimension-ladder rounds")->check(CLI::PositiveNumber);
  tr->add_option("--L", train.cfg.L, "beam width")->check(CLI::PositiveNumber);
  tr->add_option("--seed", train.cfg.seed, "RNG seed");
  tr->add_option("--kmeans-iters", train.cfg.kmeans_iters, "full-dimension k-means budget")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--kmeans-warm-iters", train.cfg.warm_iters, "warm-up round budget")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--kmeans-tol", train.cfg.kmeans_tol, "relative improvement cutoff");
  tr->add_option("--train-n", train.train_n, "train on a seeded random subset of this size")
      ->check(CLI::NonNegativeNumber);
  tr->add_option("--rest-out", train.rest_out, "write the held-out rows here (.fvecs)");
  tr->add_option("--out", train.out, "output codebook path (.rvqc)")->required();
  tr->add_option("--report", train.report, "report file (default stdout)");
  tr->add_option("--threads", train.cfg.threads, "worker threads");

  // encode
  EncodeArgs enc;
  enc.threads = irvq::default_threads();
  CLI::App* en = app.add_subcommand("encode", "encode vectors against a codebook set");
  en->add_option("--books", enc.books, "codebook path (.rvqc)")->required();
  en->add_option("--data", enc.data, "vectors to encode")->required();
  en->add_option("--L", enc.L, "beam width")->check(CLI::PositiveNumber);
  en->add_option("--epsilon-bits", enc.epsilon_bits, "0 = exact, 1..8 = quantized")
      ->check(CLI::Range(0, 8));
  en->add_option("--out", enc.out, "output database path (.rvqe)")->required();
  en->add_option("--report", enc.report, "report file (default stdout)");
  en->add_option("--threads", enc.threads, "worker threads");

  // eval
  EvalArgs ev;
  ev.threads = irvq::default_threads();
  CLI::App* ex = app.add_subcommand("eval", "recall and timing of an encoded database");
  ex->add_option("--books", ev.books, "codebook path")->required();
  ex->add_option("--db", ev.db, "encoded database path")->required();
  ex->add_option("--queries", ev.queries, "query vectors")->required();
  ex->add_option("--gt", ev.gt, "ground truth (.ivecs)");
  ex->add_option("--base", ev.base, "base vectors, to compute ground truth on the fly");
  ex->add_option("--R", ev.r_values, "recall depths")->delimiter(',');
  ex->add_option("--report", ev.report, "report file (default stdout)");
  ex->add_option("--threads", ev.threads, "worker threads");

  // diag
  DiagArgs dg;
  CLI::App* di = app.add_subcommand("diag", "code-usage diagnostics of an encoded database");
  di->add_option("--books", dg.books, "codebook path")->required();
  di->add_option("--db", dg.db, "encoded database path")->required();
  di->add_option("--data", dg.data, "original vectors, enables distortion lines");
  di->add_option("--report", dg.report, "report file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gt->parsed()) {
      const irvq::Dataset base = load_vectors(gt_base);
      const irvq::Dataset queries = load_vectors(gt_queries);
      const auto start = Clock::now();
      const irvq::GroundTruth truth = irvq::exact_knn(base, queries, gt_k, gt_threads);
      std::cerr << "ground truth in " << seconds_since(start) << "s\n";
      irvq::save_ivecs(gt_out, truth.indices);
      std::cerr << "saved " << gt_out << "\n";
    } else if (tr->parsed()) {
      run_train(train);
    } else if (en->parsed()) {
      run_encode(enc);
    } else if (ex->parsed()) {
      run_eval(ev);
    } else if (di->parsed()) {
      run_diag(dg);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
