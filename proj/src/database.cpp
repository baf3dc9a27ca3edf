#include "irvq/database.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "irvq/encode.hpp"
#include "irvq/parallel.hpp"

namespace irvq {
namespace {

constexpr char kMagic[4] = {'R', 'V', 'Q', 'E'};
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

}  // namespace

EpsilonQuantization quantize_epsilons(std::span<const float> epsilons, int bits) {
  if (bits < 1 || bits > 8)
    throw std::invalid_argument("quantize_epsilons: bits must be in [1, 8]");
  if (epsilons.empty()) throw std::invalid_argument("quantize_epsilons: empty input");
  for (const float e : epsilons)
    if (!std::isfinite(e)) throw std::invalid_argument("quantize_epsilons: non-finite input");

  const auto [lo_it, hi_it] = std::minmax_element(epsilons.begin(), epsilons.end());
  const float lo = *lo_it, hi = *hi_it;
  const int levels = (1 << bits) - 1;

  EpsilonQuantization q;
  q.offset = lo;
  q.codes.resize(epsilons.size());
  if (hi == lo) return q;  // scale 0, all codes 0, reconstruction exact

  const double step = (static_cast<double>(hi) - lo) / levels;
  q.scale = static_cast<float>(step);
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    const double t = std::round((static_cast<double>(epsilons[i]) - lo) / step);
    q.codes[i] = static_cast<std::uint8_t>(std::clamp<double>(t, 0, levels));
  }
  return q;
}

EncodedDatabase encode_database(const Eigen::Ref<const MatrixRMf>& data,
                                const CodebookSet& books, int L, int epsilon_bits, int threads) {
  if (books.stages() == 0) throw std::invalid_argument("encode_database: empty codebook set");
  if (data.cols() != books.dim())
    throw std::invalid_argument("encode_database: data dim " + std::to_string(data.cols()) +
                                " != codebook dim " + std::to_string(books.dim()));
  if (L < 1) throw std::invalid_argument("encode_database: L must be positive");
  if (epsilon_bits < 0 || epsilon_bits > 8)
    throw std::invalid_argument("encode_database: epsilon_bits must be in [0, 8]");

  const Eigen::Index n = data.rows();
  const int m = books.stages();

  EncodedDatabase db;
  db.codes.resize(n, m);
  db.codewords = books.codewords();
  Eigen::VectorXf exact(n);

  // Chunk-outer, stage-inner: beams only live for one chunk of rows.
  constexpr Eigen::Index kChunk = 1024;
  parallel_blocks(n, kChunk, threads, [&](Eigen::Index b0, Eigen::Index b1) {
    const auto block = data.middleRows(b0, b1 - b0);
    std::vector<CandidateList> beams(static_cast<std::size_t>(b1 - b0));
    for (Eigen::Index i = b0; i < b1; ++i)
      beams[static_cast<std::size_t>(i - b0)] = make_candidates(data.row(i), L);
    for (int stage = 0; stage < m; ++stage)
      extend_database_stage(block, books, stage, beams, 1);
    for (Eigen::Index i = b0; i < b1; ++i) {
      const auto best = beams[static_cast<std::size_t>(i - b0)].codes_of(0);
      std::memcpy(db.codes.row(i).data(), best.data(), best.size());
      exact[i] = books.epsilon(best);
    }
  });

  if (epsilon_bits == 0) {
    db.epsilon_mode = 0;
    db.epsilons = std::move(exact);
  } else {
    db.epsilon_mode = 1;
    EpsilonQuantization q = quantize_epsilons({exact.data(), static_cast<std::size_t>(n)},
                                              epsilon_bits);
    db.epsilon_codes = std::move(q.codes);
    db.epsilon_scale = q.scale;
    db.epsilon_offset = q.offset;
  }
  return db;
}

void save_database(const std::string& path, const EncodedDatabase& db) {
  if (db.size() == 0) throw std::invalid_argument("save_database: empty database");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(kMagic, 4);
  write_u16(out, kVersion);
  write_u32(out, static_cast<std::uint32_t>(db.size()));
  write_u32(out, static_cast<std::uint32_t>(db.stages()));
  write_u32(out, static_cast<std::uint32_t>(db.codewords));
  const unsigned char mode = db.epsilon_mode;
  out.write(reinterpret_cast<const char*>(&mode), 1);
  out.write(reinterpret_cast<const char*>(db.codes.data()),
            static_cast<std::streamsize>(db.codes.size()));
  if (db.epsilon_mode == 0) {
    out.write(reinterpret_cast<const char*>(db.epsilons.data()),
              static_cast<std::streamsize>(sizeof(float)) * db.epsilons.size());
  } else {
    out.write(reinterpret_cast<const char*>(&db.epsilon_scale), 4);
    out.write(reinterpret_cast<const char*>(&db.epsilon_offset), 4);
    out.write(reinterpret_cast<const char*>(db.epsilon_codes.data()),
              static_cast<std::streamsize>(db.epsilon_codes.size()));
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

EncodedDatabase load_database(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open for reading");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not an encoded-database file (bad magic)");
  const std::uint16_t version = read_u16(in, path);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
  const std::uint32_t n = read_u32(in, path);
  const std::uint32_t m = read_u32(in, path);
  const std::uint32_t k = read_u32(in, path);
  unsigned char mode = 0;
  if (!in.read(reinterpret_cast<char*>(&mode), 1))
    throw std::runtime_error(path + ": truncated file");
  if (n == 0 || m == 0 || k == 0 || k > 256 || mode > 1)
    throw std::runtime_error(path + ": implausible header");

  EncodedDatabase db;
  db.codes.resize(n, m);
  db.codewords = static_cast<int>(k);
  db.epsilon_mode = mode;
  if (!in.read(reinterpret_cast<char*>(db.codes.data()),
               static_cast<std::streamsize>(db.codes.size())))
    throw std::runtime_error(path + ": truncated code block");
  if (db.codes.maxCoeff() >= k)
    throw std::runtime_error(path + ": code out of range for K=" + std::to_string(k));
  if (mode == 0) {
    db.epsilons.resize(n);
    if (!in.read(reinterpret_cast<char*>(db.epsilons.data()),
                 static_cast<std::streamsize>(sizeof(float)) * db.epsilons.size()))
      throw std::runtime_error(path + ": truncated epsilon block");
  } else {
    if (!in.read(reinterpret_cast<char*>(&db.epsilon_scale), 4) ||
        !in.read(reinterpret_cast<char*>(&db.epsilon_offset), 4))
      throw std::runtime_error(path + ": truncated epsilon block");
    db.epsilon_codes.resize(n);
    if (!in.read(reinterpret_cast<char*>(db.epsilon_codes.data()),
                 static_cast<std::streamsize>(db.epsilon_codes.size())))
      throw std::runtime_error(path + ": truncated epsilon block");
  }
  in.peek();
  if (!in.eof()) throw std::runtime_error(path + ": trailing bytes after payload");
  return db;
}

}  // namespace irvq
