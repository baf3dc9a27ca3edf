#include "irvq/codebooks.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace irvq {
namespace {

constexpr char kMagic[4] = {'R', 'V', 'Q', 'C'};
constexpr std::uint16_t kVersion = 1;

void write_u16(std::ofstream& out, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>(v >> 8)};
  out.write(reinterpret_cast<const char*>(b), 2);
}

void write_u32(std::ofstream& out, std::uint32_t v) {
  const unsigned char b[4] = {
      static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
      static_cast<unsigned char>((v >> 16) & 0xff), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint16_t read_u16(std::ifstream& in, const std::string& path) {
  unsigned char b[2];
  if (!in.read(reinterpret_cast<char*>(b), 2)) throw std::runtime_error(path + ": truncated file");
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t read_u32(std::ifstream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error(path + ": truncated file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_matrix(std::ofstream& out, const MatrixRMf& m) {
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(sizeof(float)) * m.size());
}

void read_matrix(std::ifstream& in, MatrixRMf& m, const std::string& path) {
  if (!in.read(reinterpret_cast<char*>(m.data()),
               static_cast<std::streamsize>(sizeof(float)) * m.size()))
    throw std::runtime_error(path + ": truncated file");
}

}  // namespace

int cross_pair_index(int a, int b, int M) {
  if (a < 0 || b <= a || b >= M) throw std::invalid_argument("cross_pair_index: bad pair");
  // pairs (0,1)..(0,M-1), (1,2)..(1,M-1), ...
  return a * (2 * M - a - 1) / 2 + (b - a - 1);
}

const MatrixRMf& CodebookSet::cross(int a, int b) const {
  return cross_dots[static_cast<std::size_t>(cross_pair_index(a, b, stages()))];
}

void CodebookSet::append_book(MatrixRMf book) {
  if (!books.empty() &&
      (book.rows() != books.front().rows() || book.cols() != books.front().cols()))
    throw std::invalid_argument("append_book: shape mismatch with existing stages");

  // Rebuild the pair table layout: all old pairs keep their relative order
  // inside each leading stage, but indices shift because M grew. Simplest is
  // to recompute positions into a fresh vector.
  const int old_m = stages();
  const int new_m = old_m + 1;
  std::vector<MatrixRMf> fresh(static_cast<std::size_t>(new_m * (new_m - 1) / 2));
  for (int a = 0; a < old_m; ++a)
    for (int b = a + 1; b < old_m; ++b)
      fresh[static_cast<std::size_t>(cross_pair_index(a, b, new_m))] =
          std::move(cross_dots[static_cast<std::size_t>(cross_pair_index(a, b, old_m))]);
  for (int a = 0; a < old_m; ++a)
    fresh[static_cast<std::size_t>(cross_pair_index(a, old_m, new_m))] =
        books[static_cast<std::size_t>(a)] * book.transpose();
  cross_dots = std::move(fresh);
  books.push_back(std::move(book));
}

Eigen::RowVectorXf CodebookSet::reconstruct(std::span<const std::uint8_t> codes) const {
  if (codes.size() != static_cast<std::size_t>(stages()))
    throw std::invalid_argument("reconstruct: expected one code per stage");
  Eigen::RowVectorXf acc = Eigen::RowVectorXf::Zero(dim());
  for (int m = 0; m < stages(); ++m)
    acc += books[static_cast<std::size_t>(m)].row(codes[static_cast<std::size_t>(m)]);
  return acc;
}

float CodebookSet::epsilon(std::span<const std::uint8_t> codes) const {
  if (codes.size() != static_cast<std::size_t>(stages()))
    throw std::invalid_argument("epsilon: expected one code per stage");
  double acc = 0;
  for (int a = 0; a < stages(); ++a)
    for (int b = a + 1; b < stages(); ++b)
      acc += cross(a, b)(codes[static_cast<std::size_t>(a)], codes[static_cast<std::size_t>(b)]);
  return static_cast<float>(2.0 * acc);
}

void save_codebooks(const std::string& path, const CodebookSet& books) {
  if (books.stages() == 0) throw std::invalid_argument("save_codebooks: empty set");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(kMagic, 4);
  write_u16(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(books.dim()));
  write_u32(out, static_cast<std::uint32_t>(books.stages()));
  write_u32(out, static_cast<std::uint32_t>(books.codewords()));
  for (const auto& b : books.books) write_matrix(out, b);
  const int m = books.stages();
  for (int a = 0; a < m; ++a)
    for (int b = a + 1; b < m; ++b) write_matrix(out, books.cross(a, b));
  if (!out) throw std::runtime_error(path + ": write failed");
}

CodebookSet load_codebooks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a codebook file (bad magic)");
  const std::uint16_t version = read_u16(in, path);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
  const std::uint32_t d = read_u32(in, path);
  const std::uint32_t m = read_u32(in, path);
  const std::uint32_t k = read_u32(in, path);
  if (d == 0 || m == 0 || k == 0 || k > 256)
    throw std::runtime_error(path + ": implausible header");

  CodebookSet set;
  set.books.resize(m);
  for (auto& b : set.books) {
    b.resize(k, d);
    read_matrix(in, b, path);
  }
  set.cross_dots.resize(static_cast<std::size_t>(m) * (m - 1) / 2);
  for (std::uint32_t a = 0; a < m; ++a)
    for (std::uint32_t b = a + 1; b < m; ++b) {
      auto& t = set.cross_dots[static_cast<std::size_t>(
          cross_pair_index(static_cast<int>(a), static_cast<int>(b), static_cast<int>(m)))];
      t.resize(k, k);
      read_matrix(in, t, path);
    }
  in.peek();
  if (!in.eof()) throw std::runtime_error(path + ": trailing bytes after payload");
  return set;
}

}  // namespace irvq
