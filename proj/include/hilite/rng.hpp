#pragma once

#include <cstdint>
#include <random>

namespace hilite {

/// Seeded generator with a portable normal transform.
///
/// std::mt19937_64's output sequence is fixed by the standard; the
/// std::*_distribution adaptors are not, so draws go through Box–Muller and
/// an explicit unbiased integer rejection here instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  /// Independent child stream derived from (seed, stream).
  Rng split(std::uint64_t stream) const {
    return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0,1) with 53 random bits.
  double uniform();
  /// Uniform in (0,1].
  double uniform_open0() { return 1.0 - uniform(); }
  /// Uniform integer in [0, bound), bound >= 1.
  std::uint64_t below(std::uint64_t bound);
  double normal();

  static std::uint64_t mix(std::uint64_t x) noexcept;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hilite
