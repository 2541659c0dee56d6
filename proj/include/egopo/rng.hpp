#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace egopo {

// splitmix64 finalizer, used for seed expansion and stream derivation.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derives an independent sub-seed from a master seed and up to two stream
// indices. Distinct (stream, substream) pairs give decorrelated generators.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                 std::uint64_t substream = 0) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64_next(s);
  s += stream * 0x9E3779B97F4A7C15ULL;
  h ^= splitmix64_next(s);
  s += substream * 0xD1B54A32D192ED03ULL;
  h ^= splitmix64_next(s);
  return h;
}

// Well-known stream tags so independent draws never share a generator.
namespace stream_tag {
inline constexpr std::uint64_t params = 1;
inline constexpr std::uint64_t contexts = 2;
inline constexpr std::uint64_t actions = 3;
inline constexpr std::uint64_t outcomes = 4;
inline constexpr std::uint64_t folds = 5;
inline constexpr std::uint64_t eval = 6;
inline constexpr std::uint64_t cover = 7;
}  // namespace stream_tag

// xoshiro256++ with splitmix64 state expansion. Small, fast, and easy to
// reproduce in other languages.
class Xoshiro256pp {
 public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n) via 128-bit multiply-shift.
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  // Standard normal via the Marsaglia polar method; caches the paired draw.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = uniform(-1.0, 1.0);
      v = uniform(-1.0, 1.0);
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Uniform point on the probability simplex via exponential spacings.
inline std::vector<double> sample_simplex_uniform(Xoshiro256pp& rng, int dims) {
  std::vector<double> point(static_cast<std::size_t>(dims));
  double total = 0.0;
  for (auto& coordinate : point) {
    coordinate = -std::log(1.0 - rng.uniform01());
    total += coordinate;
  }
  for (auto& coordinate : point) coordinate /= total;
  return point;
}

}  // namespace egopo
