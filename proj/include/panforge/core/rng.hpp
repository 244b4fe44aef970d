// Seeded randomness with bit-stable output and serializable state.
#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <sstream>
#include <string>

#include "panforge/core/errors.hpp"

namespace panforge {

/// splitmix64 step; used to derive independent sub-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a08685b4c1f7ULL;
  return z ^ (z >> 31);
}

/// mt19937 wrapped with explicit uniform/gaussian derivations so the produced
/// doubles depend only on the engine's standardized bit stream, not on
/// library-specific distribution algorithms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0)
      : eng_(static_cast<std::uint32_t>(mix_seed(seed, 0) & 0xffffffffULL)) {}

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(eng_()) * (1.0 / 4294967296.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling to avoid modulo bias.
  std::int64_t uniform_int(std::int64_t n) {
    if (n <= 0) throw ContractError("uniform_int needs a positive bound");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = (0x100000000ULL / bound) * bound;
    for (;;) {
      std::uint64_t v = eng_();
      if (v < limit) return static_cast<std::int64_t>(v % bound);
    }
  }

  /// Standard normal via polar Box-Muller; the spare value is cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double r = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * r;
    has_spare_ = true;
    return u * r;
  }

  double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

  /// Full state as text; round-trips exactly through restore().
  std::string serialize() const {
    std::ostringstream os;
    os << eng_ << ' ' << (has_spare_ ? 1 : 0);
    if (has_spare_) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(spare_));
      std::memcpy(&bits, &spare_, sizeof(bits));
      os << ' ' << bits;
    }
    return os.str();
  }

  void restore(const std::string& state) {
    std::istringstream is(state);
    int spare_flag = 0;
    is >> eng_ >> spare_flag;
    has_spare_ = spare_flag != 0;
    if (has_spare_) {
      std::uint64_t bits = 0;
      is >> bits;
      std::memcpy(&spare_, &bits, sizeof(spare_));
    }
    if (!is) throw IoError("malformed rng state");
  }

 private:
  std::mt19937 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace panforge
