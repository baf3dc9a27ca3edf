#include "irvq/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "irvq/parallel.hpp"
#include "irvq/rng.hpp"

namespace irvq {
namespace {

[[noreturn]] void fail(const std::string& path, std::uint64_t offset, const std::string& what) {
  throw std::runtime_error(path + ": " + what + " at byte " + std::to_string(offset));
}

std::int32_t read_i32(const unsigned char* p) {
  // Little-endian on any host.
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(p[0]) |
                                   (static_cast<std::uint32_t>(p[1]) << 8) |
                                   (static_cast<std::uint32_t>(p[2]) << 16) |
                                   (static_cast<std::uint32_t>(p[3]) << 24));
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<unsigned char> bytes(static_cast<std::size_t>(size));
  if (size > 0 && !in.read(reinterpret_cast<char*>(bytes.data()), size))
    throw std::runtime_error(path + ": read failed");
  return bytes;
}

// Shared record walk for fvecs/bvecs/ivecs; element_size is the on-disk
// component width.
template <class EmitRow>
Eigen::Index parse_records(const std::string& path, const std::vector<unsigned char>& bytes,
                           std::size_t element_size, Eigen::Index& d, const EmitRow& emit) {
  std::uint64_t off = 0;
  const std::uint64_t total = bytes.size();
  Eigen::Index rows = 0;
  d = -1;
  while (off < total) {
    if (total - off < 4) fail(path, off, "truncated record header");
    const std::int32_t dim = read_i32(bytes.data() + off);
    if (dim <= 0) fail(path, off, "non-positive dimensionality " + std::to_string(dim));
    if (d == -1) {
      d = dim;
    } else if (dim != d) {
      fail(path, off, "dimensionality changed from " + std::to_string(d) + " to " + std::to_string(dim));
    }
    const std::uint64_t payload = static_cast<std::uint64_t>(dim) * element_size;
    if (total - off - 4 < payload) fail(path, off + 4, "truncated record payload");
    emit(rows, bytes.data() + off + 4, off + 4);
    ++rows;
    off += 4 + payload;
  }
  if (rows == 0) fail(path, 0, "no records");
  return rows;
}

// Two-pass load: count records (validating structure), then fill the matrix.
template <class Decode>
Dataset load_packed(const std::string& path, std::size_t element_size, const Decode& decode) {
  const std::vector<unsigned char> bytes = read_file(path);
  Eigen::Index d = -1;
  const auto nop = [](Eigen::Index, const unsigned char*, std::uint64_t) {};
  const Eigen::Index n = parse_records(path, bytes, element_size, d, nop);
  Dataset out(n, d);
  parse_records(path, bytes, element_size, d,
                [&](Eigen::Index row, const unsigned char* payload, std::uint64_t payload_off) {
                  decode(out.row(row), payload, payload_off);
                });
  return out;
}

}  // namespace

Dataset load_fvecs(const std::string& path) {
  return load_packed(path, sizeof(float),
                     [&](Eigen::Ref<Eigen::RowVectorXf> row, const unsigned char* payload,
                         std::uint64_t payload_off) {
                       std::memcpy(row.data(), payload, sizeof(float) * row.size());
                       for (Eigen::Index j = 0; j < row.size(); ++j) {
                         if (!std::isfinite(row[j]))
                           fail(path, payload_off + 4 * static_cast<std::uint64_t>(j),
                                "non-finite component");
                       }
                     });
}

Dataset load_bvecs(const std::string& path) {
  return load_packed(path, 1,
                     [](Eigen::Ref<Eigen::RowVectorXf> row, const unsigned char* payload,
                        std::uint64_t) {
                       for (Eigen::Index j = 0; j < row.size(); ++j)
                         row[j] = static_cast<float>(payload[j]);
                     });
}

void save_fvecs(const std::string& path, const Eigen::Ref<const MatrixRMf>& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  const std::int32_t d = static_cast<std::int32_t>(data.cols());
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(data.row(i).data()),
              static_cast<std::streamsize>(sizeof(float)) * data.cols());
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

void save_ivecs(const std::string& path, const IndexMatrix& indices) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  const std::int32_t d = static_cast<std::int32_t>(indices.cols());
  for (Eigen::Index i = 0; i < indices.rows(); ++i) {
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(indices.row(i).data()),
              static_cast<std::streamsize>(sizeof(std::int32_t)) * indices.cols());
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

IndexMatrix load_ivecs(const std::string& path) {
  const std::vector<unsigned char> bytes = read_file(path);
  Eigen::Index d = -1;
  const auto nop = [](Eigen::Index, const unsigned char*, std::uint64_t) {};
  const Eigen::Index n = parse_records(path, bytes, sizeof(std::int32_t), d, nop);
  IndexMatrix out(n, d);
  parse_records(path, bytes, sizeof(std::int32_t), d,
                [&](Eigen::Index row, const unsigned char* payload, std::uint64_t) {
                  std::memcpy(out.row(row).data(), payload, sizeof(std::int32_t) * d);
                });
  return out;
}

std::pair<Dataset, Dataset> split(const Eigen::Ref<const MatrixRMf>& data,
                                  Eigen::Index train_n, std::uint64_t seed) {
  const Eigen::Index n = data.rows();
  if (train_n < 0 || train_n > n)
    throw std::invalid_argument("split: train_n " + std::to_string(train_n) +
                                " out of range for " + std::to_string(n) + " rows");
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (Eigen::Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(bounded(rng, static_cast<std::uint64_t>(i) + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  Dataset train(train_n, data.cols());
  Dataset rest(n - train_n, data.cols());
  for (Eigen::Index i = 0; i < train_n; ++i) train.row(i) = data.row(perm[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = train_n; i < n; ++i)
    rest.row(i - train_n) = data.row(perm[static_cast<std::size_t>(i)]);
  return {std::move(train), std::move(rest)};
}

GroundTruth exact_knn(const Eigen::Ref<const MatrixRMf>& base,
                      const Eigen::Ref<const MatrixRMf>& queries, int k, int threads) {
  if (base.cols() != queries.cols())
    throw std::invalid_argument("exact_knn: base dim " + std::to_string(base.cols()) +
                                " != query dim " + std::to_string(queries.cols()));
  const Eigen::Index n = base.rows();
  if (k <= 0 || k > n)
    throw std::invalid_argument("exact_knn: k " + std::to_string(k) + " out of range for " +
                                std::to_string(n) + " base rows");

  GroundTruth gt;
  gt.indices.resize(queries.rows(), k);
  gt.distances.resize(queries.rows(), k);

  parallel_for(queries.rows(), threads, [&](Eigen::Index begin, Eigen::Index end) {
    Eigen::VectorXf dist(n);
    std::vector<std::int32_t> order(static_cast<std::size_t>(n));
    for (Eigen::Index q = begin; q < end; ++q) {
      // Plain per-pair subtraction: keeps distance zero exact for identical
      // rows and the values independent of the rest of the base set.
      dist = (base.rowwise() - queries.row(q)).rowwise().squaredNorm();
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + k, order.end(),
                        [&](std::int32_t a, std::int32_t b) {
                          const float da = dist[a], db = dist[b];
                          return da < db || (da == db && a < b);
                        });
      for (int j = 0; j < k; ++j) {
        gt.indices(q, j) = order[static_cast<std::size_t>(j)];
        gt.distances(q, j) = dist[order[static_cast<std::size_t>(j)]];
      }
    }
  });
  return gt;
}

}  // namespace irvq
