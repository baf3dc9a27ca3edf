#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "irvq/codebooks.hpp"
#include "irvq/types.hpp"

namespace irvq {

struct EpsilonQuantization {
  std::vector<std::uint8_t> codes;
  float scale = 0;   // zero when every input is identical
  float offset = 0;  // minimum of the inputs
};

// Uniform min/max quantizer for the per-vector epsilon constants, 1..8 bits.
// Reconstruction is offset + scale * code; the absolute error is at most half
// a step. Non-finite inputs are rejected.
EpsilonQuantization quantize_epsilons(std::span<const float> epsilons, int bits);

struct EncodedDatabase {
  CodeMatrix codes;   // n x M
  int codewords = 0;  // K of the codebook set this was encoded with
  std::uint8_t epsilon_mode = 0;  // 0: exact float32, 1: uint8-quantized

  Eigen::VectorXf epsilons;                 // mode 0
  std::vector<std::uint8_t> epsilon_codes;  // mode 1
  float epsilon_scale = 0;
  float epsilon_offset = 0;

  Eigen::Index size() const { return codes.rows(); }
  int stages() const { return static_cast<int>(codes.cols()); }

  float epsilon(Eigen::Index i) const {
    return epsilon_mode == 0
               ? epsilons[i]
               : epsilon_offset + epsilon_scale * static_cast<float>(
                                                      epsilon_codes[static_cast<std::size_t>(i)]);
  }
};

// Beam-encodes every row (width L) and stores codes plus the epsilon
// constants — exact when epsilon_bits is 0, uniformly quantized to that many
// bits otherwise. Deterministic for any thread count.
EncodedDatabase encode_database(const Eigen::Ref<const MatrixRMf>& data,
                                const CodebookSet& books, int L, int epsilon_bits, int threads);

// Binary persistence. Layout: magic "RVQE", u16 version, u32 n/M/K, u8
// epsilon mode, the n x M code bytes, then the epsilon block (n float32 for
// mode 0; float32 scale, float32 offset, n uint8 for mode 1). Little-endian;
// byte-exact round trip.
void save_database(const std::string& path, const EncodedDatabase& db);
EncodedDatabase load_database(const std::string& path);

}  // namespace irvq
