#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

#include "imgchain/hash.hpp"

namespace imgchain::rng {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// Output depends only on (key, counter), so any sample can be drawn in any
/// order from any thread.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  explicit constexpr Philox4x32(Key key) : key_(key) {}

  constexpr Counter operator()(Counter ctr) const {
    Key k = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, k);
      k[0] += 0x9E3779B9u;
      k[1] += 0xBB67AE85u;
    }
    return ctr;
  }

 private:
  static constexpr Counter single_round(const Counter& c, const Key& k) {
    const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
    const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  Key key_;
};

/// Uniform double in (0, 1) from 64 random bits; never returns 0 or 1.
constexpr double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 32 | lo) >> 11;  // 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

/// Deterministic noise stream keyed by (global seed, instance id, band).
/// Draws are addressed by (sample index, draw index, purpose tag).
class NoiseStream {
 public:
  NoiseStream(std::uint64_t seed, std::string_view instance_id, std::uint32_t band)
      : NoiseStream(seed, fnv1a64(instance_id), band) {}

  NoiseStream(std::uint64_t seed, std::uint64_t stream_id, std::uint32_t band)
      : band_(band), philox_(make_key(seed, stream_id)) {}

  /// Two uniforms in (0, 1) for sample `index`, draw `draw`, purpose `tag`.
  std::array<double, 2> uniforms(std::uint64_t index, std::uint32_t draw, std::uint32_t tag) const {
    const auto out = philox_({static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                              band_, (tag << 24) ^ draw});
    return {to_unit_open(out[0], out[1]), to_unit_open(out[2], out[3])};
  }

  /// Two independent standard normals for sample `index` (Box-Muller).
  std::array<double, 2> normals(std::uint64_t index, std::uint32_t tag = 0) const {
    const auto u = uniforms(index, 0, tag);
    const double radius = std::sqrt(-2.0 * std::log(u[0]));
    const double angle = 2.0 * std::numbers::pi * u[1];
    return {radius * std::cos(angle), radius * std::sin(angle)};
  }

  /// Exact Poisson variate with mean `lambda` for sample `index`.
  /// Knuth's product method below 10, Hormann's PTRS above.
  double poisson(std::uint64_t index, double lambda, std::uint32_t tag = 1) const {
    if (lambda <= 0.0) return 0.0;
    std::uint32_t draw = 0;
    if (lambda < 10.0) {
      const double limit = std::exp(-lambda);
      double product = 1.0;
      double k = -1.0;
      while (true) {
        const auto u = uniforms(index, draw++, tag);
        for (double v : u) {
          product *= v;
          k += 1.0;
          if (product <= limit) return k;
        }
      }
    }
    const double slam = std::sqrt(lambda);
    const double loglam = std::log(lambda);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    while (true) {
      const auto uv = uniforms(index, draw++, tag);
      const double u = uv[0] - 0.5;
      const double v = uv[1];
      const double us = 0.5 - std::abs(u);
      const double k = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
      if (us >= 0.07 && v <= vr) return k;
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
          -lambda + k * loglam - std::lgamma(k + 1.0))
        return k;
    }
  }

 private:
  static Philox4x32::Key make_key(std::uint64_t seed, std::uint64_t stream_id) {
    const std::uint64_t k = splitmix64(seed ^ splitmix64(stream_id));
    return {static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
  }

  std::uint32_t band_;
  Philox4x32 philox_;
};

/// Small deterministic integer generator for shuffles (portable, unlike
/// std::uniform_int_distribution).
class SplitMix {
 public:
  explicit SplitMix(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return splitmix64(state_ - 0x9e3779b97f4a7c15ULL);
  }
  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do x = next();
    while (x >= limit);
    return x % n;
  }
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  double normal() {
    const double u1 = uniform(), u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t state_;
};

template <typename Range>
void shuffle(Range& range, SplitMix& gen) {
  const auto n = static_cast<std::uint64_t>(std::size(range));
  for (std::uint64_t i = n; i > 1; --i) {
    const auto j = gen.below(i);
    using std::swap;
    swap(range[i - 1], range[j]);
  }
}

}  // namespace imgchain::rng
