#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "bobj/value.hpp"

namespace bobj {

/// A named, seeded random stream. Streams are derived from the run seed by hashing the
/// owner name, so adding an owner never perturbs the draws of another.
class RngStream {
 public:
  RngStream() : engine_(0) {}
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  static std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view stream_name) {
    std::uint64_t z = fnv1a(stream_name) ^ (run_seed * 0x9e3779b97f4a7c15ull);
    // splitmix64 finalizer
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). The distribution objects of <random> are not
  /// specified bit-exactly across standard libraries, so bounding is done here.
  std::uint64_t below(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % bound;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bobj
