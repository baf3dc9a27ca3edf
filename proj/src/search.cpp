#include "irvq/search.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace irvq {

DistanceTables build_tables(const Eigen::Ref<const Eigen::VectorXf>& q, const CodebookSet& books) {
  if (books.stages() == 0) throw std::invalid_argument("build_tables: empty codebook set");
  if (q.size() != books.dim())
    throw std::invalid_argument("build_tables: query dim " + std::to_string(q.size()) +
                                " != codebook dim " + std::to_string(books.dim()));
  DistanceTables t;
  t.tables.resize(books.stages(), books.codewords());
  for (int m = 0; m < books.stages(); ++m)
    t.tables.row(m) = (books.books[static_cast<std::size_t>(m)].rowwise() - q.transpose())
                          .rowwise()
                          .squaredNorm()
                          .transpose();
  t.query_sqnorm = q.squaredNorm();
  return t;
}

double adc_distance(const DistanceTables& tables, std::span<const std::uint8_t> codes,
                    float epsilon) {
  const auto m = static_cast<int>(tables.tables.rows());
  if (codes.size() != static_cast<std::size_t>(m))
    throw std::invalid_argument("adc_distance: expected one code per stage");
  double acc = 0;
  for (int s = 0; s < m; ++s) acc += tables.tables(s, codes[static_cast<std::size_t>(s)]);
  return acc - static_cast<double>(m - 1) * tables.query_sqnorm + epsilon;
}

std::vector<std::int32_t> linear_scan(const Eigen::Ref<const Eigen::VectorXf>& q,
                                      const EncodedDatabase& db, const CodebookSet& books,
                                      int R) {
  if (db.stages() != books.stages())
    throw std::invalid_argument("linear_scan: database has " + std::to_string(db.stages()) +
                                " stages, codebooks have " + std::to_string(books.stages()));
  const Eigen::Index n = db.size();
  if (R < 1 || R > n)
    throw std::invalid_argument("linear_scan: R " + std::to_string(R) + " out of range for " +
                                std::to_string(n) + " entries");

  const DistanceTables tables = build_tables(q, books);
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::uint8_t* row = db.codes.row(i).data();
    dist[static_cast<std::size_t>(i)] =
        adc_distance(tables, {row, static_cast<std::size_t>(db.stages())}, db.epsilon(i));
  }

  std::vector<std::int32_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto better = [&](std::int32_t a, std::int32_t b) {
    const double da = dist[static_cast<std::size_t>(a)], dbv = dist[static_cast<std::size_t>(b)];
    return da < dbv || (da == dbv && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + R, order.end(), better);
  order.resize(static_cast<std::size_t>(R));
  return order;
}

}  // namespace irvq
