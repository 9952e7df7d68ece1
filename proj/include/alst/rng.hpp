#pragma once

#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "alst/errors.hpp"

namespace alst {

inline std::uint64_t fnv1a64(const void* bytes, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

// Deterministic RNG: mt19937_64 core with hand-rolled distributions, so that
// every drawn value is identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  // Independent substream keyed by (seed, label). Used so e.g. parameter init
  // and epoch shuffles never share a stream.
  static Rng stream(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = fnv1a64(label, seed ^ 0x9e3779b97f4a7c15ull);
    return Rng(splitmix64(h));
  }

  std::uint64_t next_u64() { return eng_(); }

  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }  // [0,1)

  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  double normal() {
    // Box-Muller, no spare caching: two draws per sample, fixed order.
    double u1 = 1.0 - uniform01();  // (0,1]
    double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Inclusive range.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw ContractError("rng: empty integer range");
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Draw an index from an (unnormalized) nonnegative weight vector.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double x = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (x < acc) return i;
    }
    return weights.size() - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    // Fisher-Yates with our own bounded draw.
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  // mt19937_64 stream I/O is specified by the standard, so this is portable.
  std::string serialize() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
    if (!is) throw DataError("rng: bad serialized engine state");
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

  std::mt19937_64 eng_;
};

}  // namespace alst
