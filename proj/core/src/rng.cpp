#include "photonlab/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace photonlab {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

uint64_t stream_seed(uint64_t master_seed, uint64_t index) {
  return splitmix64(splitmix64(master_seed) ^ (0x9E3779B97F4A7C15ull * (index + 1)));
}

uint64_t Rng::uniform_below(uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: n must be >= 1");
  // rejection to avoid modulo bias
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  // u1 in (0,1] so the log is finite
  const double u1 = 1.0 - uniform01();
  const double u2 = uniform01();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * M_PI * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_normal_ = true;
  return r * std::cos(a);
}

int64_t Rng::poisson(double lambda) {
  if (lambda < 0.0 || !std::isfinite(lambda))
    throw std::invalid_argument("poisson: lambda must be finite and >= 0, got " +
                                std::to_string(lambda));
  if (lambda == 0.0) return 0;

  if (lambda < 30.0) {
    // Knuth product method
    const double limit = std::exp(-lambda);
    int64_t k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

  // PTRS: Hormann's transformed rejection with squeeze (no normal approximation)
  const double b = 0.931 + 2.53 * std::sqrt(lambda);
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double v_r = 0.9277 - 3.6224 / (b - 2.0);
  const double log_lambda = std::log(lambda);
  for (;;) {
    const double u = uniform01() - 0.5;
    const double v = uniform01();
    const double us = 0.5 - std::fabs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<int64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
        kf * log_lambda - lambda - std::lgamma(kf + 1.0))
      return static_cast<int64_t>(kf);
  }
}

int64_t Rng::binomial(int64_t n, double p) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("binomial: p must be in [0,1]");
  int64_t k = 0;
  for (int64_t i = 0; i < n; ++i)
    if (uniform01() < p) ++k;
  return k;
}

}  // namespace photonlab
