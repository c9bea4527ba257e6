#pragma once

#include <cstdint>
#include <random>

namespace photonlab {

/// splitmix64 finalizer; used to derive independent stream seeds.
uint64_t splitmix64(uint64_t x);

/// Seed for stream `index` of a master seed. Streams are hash-derived so
/// parallel generation is order-independent.
uint64_t stream_seed(uint64_t master_seed, uint64_t index);

/// Deterministic random source. The engine is std::mt19937_64 (fully
/// specified by the standard); all distribution transforms are implemented
/// here so sequences are reproducible independent of the C++ runtime.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n), n >= 1.
  uint64_t uniform_below(uint64_t n);

  /// Standard normal via Box-Muller (pairs cached).
  double normal();

  /// Exact Poisson draw: Knuth product method below lambda = 30, Hormann's
  /// transformed rejection with squeeze (PTRS) above. Throws on negative
  /// lambda.
  int64_t poisson(double lambda);

  /// Binomial(n, p) by explicit Bernoulli thinning.
  int64_t binomial(int64_t n, double p);

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace photonlab
