#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <vector>

#include "irvq/encode.hpp"
#include "irvq/search.hpp"
#include "test_support.hpp"

using irvq::CodebookSet;
using irvq::DistanceTables;
using irvq::EncodedDatabase;
using irvq::MatrixRMf;

TEST_CASE("distance tables hold exact query-to-codeword distances") {
  testkit::Rng rng(51);
  const CodebookSet books = testkit::random_codebooks(rng, 3, 8, 5, 2.0f);
  const Eigen::VectorXf q = testkit::random_matrix(rng, 1, 5, 2.0f).row(0).transpose();
  const DistanceTables dt = irvq::build_tables(q, books);

  REQUIRE(dt.tables.rows() == 3);
  REQUIRE(dt.tables.cols() == 8);
  CHECK(dt.query_sqnorm == doctest::Approx(q.squaredNorm()).epsilon(1e-6));
  for (int m = 0; m < 3; ++m)
    for (int k = 0; k < 8; ++k) {
      const double direct =
          (q.cast<double>() -
           books.books[static_cast<std::size_t>(m)].row(k).transpose().cast<double>())
              .squaredNorm();
      CHECK(dt.tables(m, k) == doctest::Approx(direct).epsilon(1e-4));
    }

  SUBCASE("a query sitting on a codeword has a zero entry") {
    const Eigen::VectorXf at = books.books[1].row(3).transpose();
    const DistanceTables dt2 = irvq::build_tables(at, books);
    CHECK(dt2.tables(1, 3) == doctest::Approx(0.0).epsilon(1e-9));
  }
  SUBCASE("the zero query reads back codeword norms") {
    const DistanceTables dt3 = irvq::build_tables(Eigen::VectorXf::Zero(5), books);
    for (int k = 0; k < 8; ++k)
      CHECK(dt3.tables(0, k) ==
            doctest::Approx(books.books[0].row(k).squaredNorm()).epsilon(1e-5));
  }
}

TEST_CASE("table-based distances equal direct reconstruction distances") {
  testkit::Rng rng(52);
  for (const int stages : {1, 2, 4, 8}) {
    CAPTURE(stages);
    const CodebookSet books = testkit::random_codebooks(rng, stages, 12, 16, 1.5f);
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXf q = testkit::random_matrix(rng, 1, 16, 2.0f).row(0).transpose();
      std::vector<std::uint8_t> codes(static_cast<std::size_t>(stages));
      for (auto& c : codes) c = static_cast<std::uint8_t>(rng.raw() % 12);

      const DistanceTables dt = irvq::build_tables(q, books);
      const double adc = irvq::adc_distance(dt, codes, books.epsilon(codes));
      const double direct =
          (q.cast<double>() - testkit::oracle_reconstruct(books, codes)).squaredNorm();
      CHECK(adc == doctest::Approx(direct).epsilon(1e-3));
    }
  }
}

TEST_CASE("epsilon quantization stays within half a step") {
  testkit::Rng rng(53);
  std::vector<float> eps(200);
  for (auto& e : eps) e = static_cast<float>(rng.gaussian() * 25);

  for (const int bits : {1, 4, 8}) {
    CAPTURE(bits);
    const irvq::EpsilonQuantization q = irvq::quantize_epsilons(eps, bits);
    const float lo = *std::min_element(eps.begin(), eps.end());
    const float hi = *std::max_element(eps.begin(), eps.end());
    const double step = (static_cast<double>(hi) - lo) / ((1 << bits) - 1);
    CHECK(q.offset == lo);
    CHECK(q.scale == doctest::Approx(step).epsilon(1e-6));
    for (std::size_t i = 0; i < eps.size(); ++i) {
      CHECK(q.codes[i] < (1u << bits));
      const double recon = q.offset + static_cast<double>(q.scale) * q.codes[i];
      CHECK(std::abs(recon - eps[i]) <= step / 2 + 1e-6 * std::abs(eps[i]));
    }
  }

  SUBCASE("identical inputs collapse to scale zero") {
    const std::vector<float> flat(10, 3.25f);
    const irvq::EpsilonQuantization q = irvq::quantize_epsilons(flat, 8);
    CHECK(q.scale == 0.0f);
    for (const auto c : q.codes) CHECK(c == 0);
    CHECK(q.offset + q.scale * 0.0f == 3.25f);
  }
  SUBCASE("bad inputs are rejected") {
    CHECK_THROWS_AS(irvq::quantize_epsilons(eps, 0), std::invalid_argument);
    CHECK_THROWS_AS(irvq::quantize_epsilons(eps, 9), std::invalid_argument);
    std::vector<float> nan(3, std::numeric_limits<float>::quiet_NaN());
    CHECK_THROWS_AS(irvq::quantize_epsilons(nan, 4), std::invalid_argument);
    CHECK_THROWS_AS(irvq::quantize_epsilons(std::vector<float>{}, 4), std::invalid_argument);
  }
}

TEST_CASE("database encoding matches the per-vector encoder") {
  testkit::Rng rng(54);
  const CodebookSet books = testkit::random_codebooks(rng, 4, 10, 8, 1.5f);
  const MatrixRMf data = testkit::random_matrix(rng, 60, 8, 2.0f);

  const EncodedDatabase db = irvq::encode_database(data, books, 5, 0, 1);
  REQUIRE(db.size() == 60);
  REQUIRE(db.stages() == 4);
  CHECK(db.codewords == 10);
  CHECK(db.epsilon_mode == 0);

  for (Eigen::Index i = 0; i < 60; ++i) {
    const auto [enc, list] = irvq::encode_multipath(data.row(i).transpose(), books, 5);
    for (int m = 0; m < 4; ++m)
      CHECK(db.codes(i, m) == enc.codes[static_cast<std::size_t>(m)]);
    CHECK(db.epsilon(i) == enc.epsilon);
  }

  SUBCASE("quantized epsilons stay within half a step of exact") {
    const EncodedDatabase q8 = irvq::encode_database(data, books, 5, 8, 1);
    CHECK(q8.epsilon_mode == 1);
    for (Eigen::Index i = 0; i < 60; ++i)
      CHECK(std::abs(q8.epsilon(i) - db.epsilon(i)) <=
            q8.epsilon_scale / 2 + 1e-6f * std::abs(db.epsilon(i)));
  }
  SUBCASE("thread count changes nothing") {
    const EncodedDatabase t4 = irvq::encode_database(data, books, 5, 0, 4);
    CHECK(t4.codes == db.codes);
    CHECK(t4.epsilons == db.epsilons);
  }
}

TEST_CASE("linear scan agrees with a brute-force pass over the same tables") {
  testkit::Rng rng(55);
  const CodebookSet books = testkit::random_codebooks(rng, 3, 9, 6, 1.5f);
  const MatrixRMf data = testkit::random_matrix(rng, 80, 6, 2.0f);
  const EncodedDatabase db = irvq::encode_database(data, books, 4, 0, 1);
  const Eigen::VectorXf q = testkit::random_matrix(rng, 1, 6, 2.0f).row(0).transpose();

  const DistanceTables dt = irvq::build_tables(q, books);
  std::vector<std::pair<double, std::int32_t>> brute;
  for (Eigen::Index i = 0; i < db.size(); ++i) {
    std::vector<std::uint8_t> codes(3);
    for (int m = 0; m < 3; ++m) codes[static_cast<std::size_t>(m)] = db.codes(i, m);
    brute.emplace_back(irvq::adc_distance(dt, codes, db.epsilon(i)),
                       static_cast<std::int32_t>(i));
  }
  std::sort(brute.begin(), brute.end());

  for (const int R : {1, 7, 80}) {
    const std::vector<std::int32_t> top = irvq::linear_scan(q, db, books, R);
    REQUIRE(top.size() == static_cast<std::size_t>(R));
    for (int r = 0; r < R; ++r) CHECK(top[static_cast<std::size_t>(r)] == brute[static_cast<std::size_t>(r)].second);
  }
  CHECK_THROWS_AS(irvq::linear_scan(q, db, books, 0), std::invalid_argument);
  CHECK_THROWS_AS(irvq::linear_scan(q, db, books, 81), std::invalid_argument);
}

TEST_CASE("a scan finds vectors that the codebooks represent exactly") {
  testkit::Rng rng(56);
  const CodebookSet books = testkit::random_codebooks(rng, 2, 6, 4, 2.0f);
  MatrixRMf data(36, 4);
  std::vector<std::vector<std::uint8_t>> truth;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) {
      const std::vector<std::uint8_t> codes{static_cast<std::uint8_t>(i),
                                            static_cast<std::uint8_t>(j)};
      data.row(6 * i + j) = testkit::oracle_reconstruct(books, codes).transpose().cast<float>();
      truth.push_back(codes);
    }

  const EncodedDatabase db = irvq::encode_database(data, books, 6, 0, 1);
  for (Eigen::Index i = 0; i < 36; ++i) {
    // exact representations survive encoding...
    const Eigen::RowVectorXf recon = books.reconstruct(
        std::vector<std::uint8_t>{db.codes(i, 0), db.codes(i, 1)});
    CHECK((recon - data.row(i)).squaredNorm() == doctest::Approx(0.0).epsilon(1e-8));
    // ...and querying each row brings itself back first
    const std::vector<std::int32_t> top = irvq::linear_scan(data.row(i).transpose(), db, books, 1);
    CHECK(top[0] == static_cast<std::int32_t>(i));
  }
}

TEST_CASE("database files round-trip bit for bit in both epsilon modes") {
  testkit::Rng rng(57);
  const CodebookSet books = testkit::random_codebooks(rng, 3, 7, 5, 1.5f);
  const MatrixRMf data = testkit::random_matrix(rng, 25, 5, 2.0f);
  testkit::TempDir dir;

  for (const int bits : {0, 6}) {
    CAPTURE(bits);
    const EncodedDatabase db = irvq::encode_database(data, books, 3, bits, 1);
    const std::string path = dir.path("db" + std::to_string(bits) + ".rvqe");
    irvq::save_database(path, db);
    const EncodedDatabase loaded = irvq::load_database(path);

    CHECK(loaded.codes == db.codes);
    CHECK(loaded.codewords == db.codewords);
    CHECK(loaded.epsilon_mode == db.epsilon_mode);
    if (bits == 0) {
      CHECK(loaded.epsilons == db.epsilons);
    } else {
      CHECK(loaded.epsilon_codes == db.epsilon_codes);
      CHECK(loaded.epsilon_scale == db.epsilon_scale);
      CHECK(loaded.epsilon_offset == db.epsilon_offset);
    }
    const std::string again = dir.path("again" + std::to_string(bits) + ".rvqe");
    irvq::save_database(again, loaded);
    CHECK(testkit::file_hash(path) == testkit::file_hash(again));
  }
}

TEST_CASE("malformed database files are rejected") {
  testkit::Rng rng(58);
  const CodebookSet books = testkit::random_codebooks(rng, 2, 4, 3);
  const MatrixRMf data = testkit::random_matrix(rng, 10, 3);
  const EncodedDatabase db = irvq::encode_database(data, books, 2, 0, 1);
  testkit::TempDir dir;
  const std::string path = dir.path("db.rvqe");
  irvq::save_database(path, db);

  SUBCASE("wrong magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("NOPE", 4);
    f.close();
    CHECK_THROWS_WITH_AS(static_cast<void>(irvq::load_database(path)),
                         doctest::Contains("magic"), std::runtime_error);
  }
  SUBCASE("truncation") {
    std::error_code ec;
    std::filesystem::resize_file(path, std::filesystem::file_size(path) - 3, ec);
    REQUIRE(!ec);
    CHECK_THROWS_AS(static_cast<void>(irvq::load_database(path)), std::runtime_error);
  }
  SUBCASE("trailing bytes") {
    std::ofstream f(path, std::ios::app | std::ios::binary);
    f.write("x", 1);
    f.close();
    CHECK_THROWS_WITH_AS(static_cast<void>(irvq::load_database(path)),
                         doctest::Contains("trailing"), std::runtime_error);
  }
  SUBCASE("code bytes beyond K") {
    // the code block starts right after magic(4) + version(2) + n/M/K(12) + mode(1)
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(19);
    const char big = static_cast<char>(200);
    f.write(&big, 1);
    f.close();
    CHECK_THROWS_WITH_AS(static_cast<void>(irvq::load_database(path)),
                         doctest::Contains("out of range"), std::runtime_error);
  }
}
