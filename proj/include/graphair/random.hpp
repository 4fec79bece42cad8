#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <string_view>

namespace graphair {

/// The engine used for every stochastic operation in the library.
using Rng = std::mt19937_64;

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::atomic<std::uint64_t>& global_seed_slot() {
  static std::atomic<std::uint64_t> seed{0};
  return seed;
}

}  // namespace detail

/// Independent stream for (seed, purpose). Distinct purposes never share a
/// stream, so adding a consumer does not shift the draws of another.
inline Rng make_rng(std::uint64_t seed, std::string_view purpose) {
  const std::uint64_t mixed =
      detail::splitmix64(detail::splitmix64(seed) ^ detail::fnv1a(purpose));
  std::seed_seq seq{static_cast<std::uint32_t>(mixed),
                    static_cast<std::uint32_t>(mixed >> 32)};
  return Rng(seq);
}

inline Rng make_rng(std::uint64_t seed, std::string_view purpose, std::uint64_t index) {
  return make_rng(detail::splitmix64(seed + 0x632BE59BD9B4E019ULL * (index + 1)), purpose);
}

/// Sets the process-wide base seed used by `global_rng`. Components that take
/// an explicit seed (trainer, splits, subgraph sampling) derive their streams
/// from that seed instead.
inline void set_global_seed(std::uint64_t seed) { detail::global_seed_slot().store(seed); }

inline std::uint64_t global_seed() { return detail::global_seed_slot().load(); }

inline Rng global_rng(std::string_view purpose) { return make_rng(global_seed(), purpose); }

/// Uniform double in the open interval (0, 1), built from 53 random bits.
/// Implemented here so draws are identical across standard libraries.
inline double uniform_open(Rng& rng) {
  constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
  return (static_cast<double>(rng() >> 11) + 0.5) * scale;
}

/// Uniform integer in [0, bound) by rejection; bound > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % bound;
}

/// Standard normal via Box-Muller.
inline double standard_normal(Rng& rng) {
  const double u1 = uniform_open(rng);
  const double u2 = uniform_open(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

/// Logistic noise log(u) - log(1-u), the reparameterisation noise of a
/// relaxed Bernoulli sample.
inline double logistic_noise(Rng& rng) {
  const double u = uniform_open(rng);
  return std::log(u) - std::log1p(-u);
}

/// Fisher-Yates shuffle driven by `uniform_index`.
template <typename Container>
void shuffle(Container& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_index(rng, i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

inline std::string rng_state(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

inline Rng rng_from_state(const std::string& state) {
  Rng rng;
  std::istringstream in(state);
  in >> rng;
  return rng;
}

}  // namespace graphair
