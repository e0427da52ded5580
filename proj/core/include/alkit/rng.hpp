#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace alkit {

// splitmix64 finalizer; the bit mixer behind seed derivation and the stream
// generator. Fully specified, so streams are identical on every platform.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives an independent seed for a (purpose, fold, iteration, ...) tuple by
// folding each component through the mixer. Adding a consumer of one stream
// never perturbs another.
inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc908ULL;  // sqrt(2) bits, arbitrary nonzero start
  for (std::uint64_t p : parts) {
    h = mix64(h ^ mix64(p));
  }
  return h;
}

// Deterministic pseudo-random stream (splitmix64).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Unbiased integer in [0, bound), Lemire's multiply-shift rejection.
  std::uint64_t next_below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("Rng::next_below: bound must be > 0");
    unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Uniform double in [0, 1) with 53 random mantissa bits.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller. Draws two uniforms per call; no cached
  // spare, so the stream position is a pure function of the call count.
  double next_gaussian() {
    double u1 = next_double();
    double u2 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // k distinct elements drawn without replacement, in draw order.
  template <typename T>
  std::vector<T> sample_without_replacement(std::span<const T> pool, std::size_t k) {
    if (k > pool.size()) {
      throw std::invalid_argument("Rng::sample_without_replacement: k exceeds pool size");
    }
    std::vector<T> scratch(pool.begin(), pool.end());
    std::vector<T> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t j = i + static_cast<std::size_t>(next_below(scratch.size() - i));
      std::swap(scratch[i], scratch[j]);
      out.push_back(scratch[i]);
    }
    return out;
  }

 private:
  std::uint64_t state_;
};

}  // namespace alkit
