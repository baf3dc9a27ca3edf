#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "irvq/encode.hpp"
#include "test_support.hpp"

using irvq::CandidateList;
using irvq::CodebookSet;
using irvq::Encoding;
using irvq::MatrixRMf;

namespace {

std::vector<std::uint8_t> to_vec(std::span<const std::uint8_t> s) {
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("vectors composed from axis-disjoint codebooks encode losslessly") {
  // book 0 lives in dims 0..1, book 1 in dims 2..3
  MatrixRMf b0 = MatrixRMf::Zero(3, 4), b1 = MatrixRMf::Zero(3, 4);
  b0.block(0, 0, 3, 2) << 1, 0, 0, 2, -3, 1;
  b1.block(0, 2, 3, 2) << 5, 0, 0, -4, 2, 2;
  CodebookSet books;
  books.append_book(b0);
  books.append_book(b1);

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const Eigen::VectorXf x = (b0.row(i) + b1.row(j)).transpose();
      const Encoding enc = irvq::encode_sequential(x, books);
      CHECK(enc.codes == std::vector<std::uint8_t>{static_cast<std::uint8_t>(i),
                                                   static_cast<std::uint8_t>(j)});
      CHECK(testkit::oracle_error(books, x, enc.codes) == doctest::Approx(0.0).epsilon(1e-10));
      CHECK(enc.epsilon == doctest::Approx(0.0).epsilon(1e-10));  // disjoint support
    }
}

TEST_CASE("a single stage picks the nearest codeword") {
  testkit::Rng rng(31);
  const CodebookSet books = testkit::random_codebooks(rng, 1, 13, 6);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::VectorXf x = testkit::random_matrix(rng, 1, 6, 2.0f).row(0).transpose();
    int nearest = 0;
    double best = (x.cast<double>() - books.books[0].row(0).transpose().cast<double>()).squaredNorm();
    for (int k = 1; k < 13; ++k) {
      const double d =
          (x.cast<double>() - books.books[0].row(k).transpose().cast<double>()).squaredNorm();
      if (d < best) {
        best = d;
        nearest = k;
      }
    }
    const Encoding enc = irvq::encode_sequential(x, books);
    CHECK(enc.codes[0] == nearest);
  }
}

TEST_CASE("the beam escapes the greedy trap on the scalar two-stage instance") {
  // stage 1 {0, 10}, stage 2 {-6, 6}; for x = 4.9 the greedy path commits to
  // 0 then 6 (error 1.21) while 10 + (-6) = 4 achieves 0.81.
  MatrixRMf b0(2, 1), b1(2, 1);
  b0 << 0, 10;
  b1 << -6, 6;
  CodebookSet books;
  books.append_book(b0);
  books.append_book(b1);
  Eigen::VectorXf x(1);
  x << 4.9f;

  const Encoding greedy = irvq::encode_sequential(x, books);
  CHECK(greedy.codes == std::vector<std::uint8_t>{0, 1});
  CHECK(testkit::oracle_error(books, x, greedy.codes) == doctest::Approx(1.21).epsilon(1e-5));

  const auto [beam, list] = irvq::encode_multipath(x, books, 2);
  CHECK(beam.codes == std::vector<std::uint8_t>{1, 0});
  CHECK(testkit::oracle_error(books, x, beam.codes) == doctest::Approx(0.81).epsilon(1e-5));

  // all four candidate sums, checked exhaustively
  CHECK(testkit::oracle_exhaustive_error(books, x) == doctest::Approx(0.81).epsilon(1e-5));
  CHECK(list.errors.front() == doctest::Approx(0.81).epsilon(1e-4));
}

TEST_CASE("width-1 beam, greedy entry point and a double-precision oracle agree") {
  testkit::Rng rng(32);
  const CodebookSet books = testkit::random_codebooks(rng, 4, 16, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::VectorXf x = testkit::random_matrix(rng, 1, 8, 2.0f).row(0).transpose();
    const Encoding seq = irvq::encode_sequential(x, books);
    const auto [beam, list] = irvq::encode_multipath(x, books, 1);
    CHECK(seq.codes == beam.codes);
    CHECK(seq.epsilon == beam.epsilon);
    CHECK(seq.codes == testkit::oracle_greedy(books, x));
    CHECK(list.count == 1);
  }
}

TEST_CASE("a beam as wide as the codebook solves two-stage instances exactly") {
  testkit::Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 4 + static_cast<int>(rng.raw() % 13);  // 4..16
    const auto d = static_cast<Eigen::Index>(2 + rng.raw() % 7);  // 2..8
    const CodebookSet books = testkit::random_codebooks(rng, 2, k, d);
    const Eigen::VectorXf x = testkit::random_matrix(rng, 1, d, 2.0f).row(0).transpose();
    const auto [enc, list] = irvq::encode_multipath(x, books, k);
    const double best = testkit::oracle_error(books, x, enc.codes);
    const double oracle = testkit::oracle_exhaustive_error(books, x);
    CHECK(best == doctest::Approx(oracle).epsilon(1e-4));
  }
}

TEST_CASE("the first beam step reproduces the raw distance row") {
  testkit::Rng rng(34);
  const CodebookSet books = testkit::random_codebooks(rng, 2, 10, 5);
  const Eigen::VectorXf x = testkit::random_matrix(rng, 1, 5, 2.0f).row(0).transpose();

  const CandidateList root = irvq::make_candidates(x, 4);
  CHECK(root.count == 1);
  CHECK(root.stages == 0);
  CHECK(root.errors[0] == doctest::Approx(x.squaredNorm()).epsilon(1e-6));

  const CandidateList step = irvq::extend_candidates(root, x, books, 0);
  std::vector<std::pair<double, int>> dists;
  for (int k = 0; k < 10; ++k)
    dists.emplace_back(
        (x.cast<double>() - books.books[0].row(k).transpose().cast<double>()).squaredNorm(), k);
  std::sort(dists.begin(), dists.end());

  REQUIRE(step.count == 4);
  REQUIRE(step.stages == 1);
  for (int l = 0; l < 4; ++l) {
    CHECK(step.errors[static_cast<std::size_t>(l)] ==
          doctest::Approx(dists[static_cast<std::size_t>(l)].first).epsilon(1e-4));
    CHECK(step.codes_of(l)[0] == dists[static_cast<std::size_t>(l)].second);
  }
}

TEST_CASE("beam errors track the true reconstruction error across stages") {
  testkit::Rng rng(35);
  const CodebookSet books = testkit::random_codebooks(rng, 5, 12, 16, 1.5f);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXf x = testkit::random_matrix(rng, 1, 16, 3.0f).row(0).transpose();
    CandidateList list = irvq::make_candidates(x, 6);
    for (int m = 0; m < 5; ++m) {
      list = irvq::extend_candidates(list, x, books, m);
      for (int l = 0; l < list.count; ++l) {
        const double direct = testkit::oracle_error(books, x, to_vec(list.codes_of(l)));
        CHECK(list.errors[static_cast<std::size_t>(l)] ==
              doctest::Approx(direct).epsilon(1e-3));
      }
      // sorted ascending, distinct sequences
      for (int l = 1; l < list.count; ++l) {
        CHECK(list.errors[static_cast<std::size_t>(l)] >=
              list.errors[static_cast<std::size_t>(l - 1)]);
        CHECK(to_vec(list.codes_of(l)) != to_vec(list.codes_of(l - 1)));
      }
    }
  }
}

TEST_CASE("ties break toward the lexicographically smaller sequence") {
  // every codeword of stage 2 identical: all extensions of a prefix tie
  MatrixRMf b0(3, 2), b1(3, 2);
  b0 << 1, 0, 0, 1, 9, 9;
  b1 << 2, 2, 2, 2, 2, 2;
  CodebookSet books;
  books.append_book(b0);
  books.append_book(b1);
  Eigen::VectorXf x(2);
  x << 1, 0;  // stage 1 picks code 0 uniquely

  CandidateList list = irvq::make_candidates(x, 3);
  list = irvq::extend_candidates(list, x, books, 0);
  list = irvq::extend_candidates(list, x, books, 1);
  REQUIRE(list.count == 3);
  CHECK(list.errors[0] == doctest::Approx(list.errors[2]).epsilon(1e-9));
  CHECK(to_vec(list.codes_of(0)) == std::vector<std::uint8_t>{0, 0});
  CHECK(to_vec(list.codes_of(1)) == std::vector<std::uint8_t>{0, 1});
  CHECK(to_vec(list.codes_of(2)) == std::vector<std::uint8_t>{0, 2});
}

TEST_CASE("returned epsilon matches the codebook-side computation") {
  testkit::Rng rng(36);
  const CodebookSet books = testkit::random_codebooks(rng, 4, 9, 7, 2.0f);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXf x = testkit::random_matrix(rng, 1, 7, 2.5f).row(0).transpose();
    const auto [enc, list] = irvq::encode_multipath(x, books, 3);
    CHECK(enc.epsilon == books.epsilon(enc.codes));
    CHECK(enc.codes == to_vec(list.codes_of(0)));
  }
}

TEST_CASE("the batched stage extension matches the per-vector path") {
  testkit::Rng rng(37);
  const CodebookSet books = testkit::random_codebooks(rng, 3, 11, 9);
  const MatrixRMf data = testkit::random_matrix(rng, 40, 9, 2.0f);

  std::vector<CandidateList> batch;
  std::vector<CandidateList> solo;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    batch.push_back(irvq::make_candidates(data.row(i).transpose(), 4));
    solo.push_back(irvq::make_candidates(data.row(i).transpose(), 4));
  }
  for (int m = 0; m < 3; ++m) {
    irvq::extend_database_stage(data, books, m, batch, 1);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      auto& list = solo[static_cast<std::size_t>(i)];
      list = irvq::extend_candidates(list, data.row(i).transpose(), books, m);
    }
  }
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    const auto& a = batch[static_cast<std::size_t>(i)];
    const auto& b = solo[static_cast<std::size_t>(i)];
    REQUIRE(a.count == b.count);
    CHECK(a.codes == b.codes);  // same selections despite different float routes
    for (int l = 0; l < a.count; ++l)
      CHECK(a.errors[static_cast<std::size_t>(l)] ==
            doctest::Approx(b.errors[static_cast<std::size_t>(l)]).epsilon(1e-4));
  }

  SUBCASE("thread count changes nothing") {
    std::vector<CandidateList> threaded;
    for (Eigen::Index i = 0; i < data.rows(); ++i)
      threaded.push_back(irvq::make_candidates(data.row(i).transpose(), 4));
    for (int m = 0; m < 3; ++m) irvq::extend_database_stage(data, books, m, threaded, 4);
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      CHECK(threaded[static_cast<std::size_t>(i)].codes ==
            batch[static_cast<std::size_t>(i)].codes);
      CHECK(threaded[static_cast<std::size_t>(i)].errors ==
            batch[static_cast<std::size_t>(i)].errors);
    }
  }
}

TEST_CASE("encode argument validation") {
  testkit::Rng rng(38);
  const CodebookSet books = testkit::random_codebooks(rng, 2, 4, 3);
  const Eigen::VectorXf x = Eigen::VectorXf::Ones(3);
  CHECK_THROWS_AS(irvq::make_candidates(x, 0), std::invalid_argument);
  CHECK_THROWS_AS(irvq::encode_multipath(x, CodebookSet{}, 2), std::invalid_argument);

  CandidateList list = irvq::make_candidates(x, 2);
  CHECK_THROWS_AS(irvq::extend_candidates(list, x, books, 1), std::invalid_argument);
  const Eigen::VectorXf wrong = Eigen::VectorXf::Ones(4);
  CHECK_THROWS_AS(irvq::extend_candidates(list, wrong, books, 0), std::invalid_argument);
}
