#pragma once

// Counter-based generator (Philox4x32-10) and the samplers built on it.
// A draw is a pure function of (seed, stream, index), so any coordinate of any
// replication can be produced independently of scheduling.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace balance {

using Block = std::array<std::uint32_t, 4>;

inline Block philox4x32_10(Block ctr, std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
  constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = std::uint64_t(kM0) * ctr[0];
    const std::uint64_t p1 = std::uint64_t(kM1) * ctr[2];
    ctr = {std::uint32_t(p1 >> 32) ^ ctr[1] ^ key[0], std::uint32_t(p1),
           std::uint32_t(p0 >> 32) ^ ctr[3] ^ key[1], std::uint32_t(p0)};
    key[0] += kW0;
    key[1] += kW1;
  }
  return ctr;
}

struct CounterKey {
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  bool operator==(const CounterKey&) const = default;
};

// Two 64-bit words for sequence index `index` of the given stream.
inline std::array<std::uint64_t, 2> block_at(const CounterKey& k, std::uint64_t index) {
  const Block out = philox4x32_10(
      {std::uint32_t(index), std::uint32_t(index >> 32), std::uint32_t(k.stream),
       std::uint32_t(k.stream >> 32)},
      {std::uint32_t(k.seed), std::uint32_t(k.seed >> 32)});
  return {(std::uint64_t(out[1]) << 32) | out[0], (std::uint64_t(out[3]) << 32) | out[2]};
}

inline std::uint64_t word_at(const CounterKey& k, std::uint64_t position) {
  return block_at(k, position >> 1)[position & 1u];
}

inline double to_unit_open(std::uint64_t bits) {
  // (0, 1): never returns 0, so log() is safe.
  return (double(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Bits for the draw at position p: word (p & 1) of block p >> 1 first, then
// overflow blocks in the reserved upper half of the index space for the rare
// rejection paths.
class DrawBits {
 public:
  DrawBits(const CounterKey& k, std::uint64_t position) : key_(k), position_(position) {
    first_ = word_at(k, position);
  }
  DrawBits(const CounterKey& k, std::uint64_t position, std::uint64_t first_word)
      : key_(k), position_(position), first_(first_word) {}

  std::uint64_t next() {
    if (!used_first_) {
      used_first_ = true;
      return first_;
    }
    if (pos_ == 2) {
      words_ = block_at(key_, (std::uint64_t(1) << 63) | (position_ << 6) | (refill_++ & 63u));
      pos_ = 0;
    }
    return words_[pos_++];
  }
  double uniform() { return to_unit_open(next()); }

 private:
  CounterKey key_;
  std::uint64_t position_;
  std::uint64_t first_;
  bool used_first_ = false;
  std::array<std::uint64_t, 2> words_{};
  int pos_ = 2;
  std::uint64_t refill_ = 0;
};

namespace detail {

struct ZigguratTables {
  double x[257];
  double f[257];
  ZigguratTables() {
    constexpr double kR = 3.6541528853610088;
    constexpr double kV = 0.00492867323399;
    x[0] = kV / std::exp(-0.5 * kR * kR);
    x[1] = kR;
    for (int i = 1; i < 255; ++i)
      x[i + 1] = std::sqrt(-2.0 * std::log(kV / x[i] + std::exp(-0.5 * x[i] * x[i])));
    x[256] = 0.0;
    for (int i = 0; i <= 256; ++i) f[i] = std::exp(-0.5 * x[i] * x[i]);
  }
};

inline const ZigguratTables kZiggurat{};

}  // namespace detail

// Standard normal by the 256-layer ziggurat.
inline double ziggurat_normal(DrawBits& bits) {
  constexpr double kR = 3.6541528853610088;
  const auto& t = detail::kZiggurat;
  for (;;) {
    const std::uint64_t w = bits.next();
    const int i = int(w & 255u);
    const double sign = (w & 256u) ? -1.0 : 1.0;
    const double u = double(std::int64_t(w >> 11)) * 0x1.0p-53;
    const double z = u * t.x[i];
    if (z < t.x[i + 1]) return sign * z;
    if (i == 0) {
      for (;;) {
        const double xt = -std::log(bits.uniform()) / kR;
        const double yt = -std::log(bits.uniform());
        if (yt + yt > xt * xt) return sign * (kR + xt);
      }
    }
    const double y = t.f[i] + bits.uniform() * (t.f[i + 1] - t.f[i]);
    if (y < std::exp(-0.5 * z * z)) return sign * z;
  }
}

inline double normal_at(const CounterKey& k, std::uint64_t position) {
  DrawBits bits(k, position);
  return ziggurat_normal(bits);
}

// Standard normals for positions first .. first + count - 1; identical to
// calling normal_at position by position. Blocks are generated in a separate
// pass so the generator loop stays branch-free.
inline void fill_normals(const CounterKey& k, std::uint64_t first, std::size_t count,
                         double* out) {
  constexpr std::size_t kChunk = 128;
  const auto& t = detail::kZiggurat;
  std::size_t i = 0;
  if (count > 0 && (first & 1u)) {
    out[0] = normal_at(k, first);
    i = 1;
  }
  std::uint64_t words[2 * kChunk];
  while (i + 1 < count) {
    const std::size_t pairs = std::min(kChunk, (count - i) / 2);
    const std::uint64_t block0 = (first + i) >> 1;
    for (std::size_t b = 0; b < pairs; ++b) {
      const auto w = block_at(k, block0 + b);
      words[2 * b] = w[0];
      words[2 * b + 1] = w[1];
    }
    for (std::size_t j = 0; j < 2 * pairs; ++j) {
      const std::uint64_t bits = words[j];
      const int layer = int(bits & 255u);
      const double z = double(std::int64_t(bits >> 11)) * 0x1.0p-53 * t.x[layer];
      if (z < t.x[layer + 1]) {
        out[i + j] = (bits & 256u) ? -z : z;
      } else {
        DrawBits slow(k, first + i + j, bits);
        out[i + j] = ziggurat_normal(slow);
      }
    }
    i += 2 * pairs;
  }
  if (i < count) out[i] = normal_at(k, first + i);
}

}  // namespace balance
