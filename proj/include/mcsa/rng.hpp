#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mcsa {

/// xoshiro256++ bit generator: 32 bytes of state, cheap to construct, so
/// every chain and replicate can own a private stream.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;
  explicit Xoshiro256pp(std::uint64_t seed);
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }
  result_type operator()();

 private:
  std::uint64_t s_[4];
};

/// Random stream owned by exactly one chain, replicate or experiment cell.
///
/// Streams are derived from a base seed and a tuple of integer keys by
/// hashing, so any cell of a grid can be regenerated independently of the
/// order (or thread) in which cells are executed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  /// Stream keyed by (seed, keys...). Distinct key tuples give
  /// statistically independent streams.
  static Rng stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

  /// Uniform on [0, 1), 53 bits.
  double uniform();
  double normal();
  double student_t(double df);
  double chi_squared(double df);
  std::uint64_t next_u64() { return engine_(); }

 private:
  Xoshiro256pp engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 finalizer; exposed for seed derivation in experiment grids.
std::uint64_t mix64(std::uint64_t x);

/// Hash a tuple of keys onto a base seed.
std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys);

}  // namespace mcsa
