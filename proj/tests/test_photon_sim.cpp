#include <cmath>
#include <cstring>

#include "doctest.h"
#include "photonlab/photon_sim.hpp"
#include "photonlab/rng.hpp"
#include "test_support.hpp"

using namespace photonlab;

TEST_SUITE("photon_sim") {

TEST_CASE("flux_map normalizes by the image mean") {
  Image uniform(28, 28, 0.37f);
  const auto rates = flux_map(uniform, 1.6);
  for (double r : rates) CHECK(r == doctest::Approx(1.6).epsilon(1e-12));

  Image zero(28, 28, 0.f);
  for (double r : flux_map(zero, 1.6)) CHECK(r == 0.0);

  Image half(28, 28, 0.f);
  for (int r = 0; r < 28; ++r)
    for (int c = 14; c < 28; ++c) half.at(r, c) = 1.f;
  const auto rates2 = flux_map(half, 0.8);
  CHECK(rates2[0] == 0.0);
  CHECK(rates2[27] == doctest::Approx(1.6).epsilon(1e-12));
}

TEST_CASE("zero image with no dark counts or read noise gives an empty frame") {
  CameraModel cam = CameraModel::paper_like(1.6);
  cam.dark_rate = 0.0;
  cam.sigma_read = 0.0;
  const Frame f = simulate_frame(Image(28, 28, 0.f), cam, 123);
  CHECK(f.ones_count() == 0);
}

TEST_CASE("frames are strictly binary and deterministic in the seed") {
  const Image img = [] {
    Image im(28, 28);
    Rng rng(55);
    for (auto& v : im.pix) v = static_cast<float>(rng.uniform01());
    return im;
  }();
  const CameraModel cam = CameraModel::paper_like(1.6);
  const Frame a = simulate_frame(img, cam, 77);
  const Frame b = simulate_frame(img, cam, 77);
  CHECK(std::memcmp(a.bits.data(), b.bits.data(), a.size()) == 0);
  for (uint8_t v : a.bits) CHECK(v <= 1);

  const Frame c = simulate_frame(img, cam, 78);
  CHECK(std::memcmp(a.bits.data(), c.bits.data(), a.size()) != 0);
}

TEST_CASE("uniform flux ones-fraction matches the analytic Bernoulli rate") {
  // P(on) = 1 - exp(-(lambda + dark)) when gain bridges the threshold and
  // read noise is negligible
  CameraModel cam = CameraModel::paper_like(1.6);
  cam.dark_rate = 0.0;
  cam.sigma_read = 0.0;
  const Image uniform(28, 28, 0.5f);

  for (auto [mu, expected] : {std::pair{1.6, 0.7981034820053446},
                              std::pair{0.8, 0.5506710358827784}}) {
    cam.mean_photons = mu;
    size_t ones = 0, total = 0;
    const int frames = 1276;  // ~1e6 pixel draws
    for (int k = 0; k < frames; ++k) {
      const Frame f = simulate_frame(uniform, cam, stream_seed(900 + (mu > 1), k));
      ones += f.ones_count();
      total += f.size();
    }
    const double fraction = static_cast<double>(ones) / static_cast<double>(total);
    CHECK(std::fabs(fraction - expected) < 0.002);
  }
}

TEST_CASE("raising the threshold never increases the ones-fraction") {
  Image img(28, 28);
  Rng rng(60);
  for (auto& v : img.pix) v = static_cast<float>(rng.uniform01());
  CameraModel cam = CameraModel::paper_like(1.6);
  size_t prev = SIZE_MAX;
  for (double threshold : {0.3, 0.5, 1.5}) {
    cam.threshold = threshold;
    size_t ones = 0;
    for (int k = 0; k < 64; ++k)
      ones += simulate_frame(img, cam, stream_seed(71, k)).ones_count();
    CHECK(ones <= prev);
    prev = ones;
  }
}

TEST_CASE("accumulate_frames: n=1 equals simulate_frame, counts bounded") {
  Image img(28, 28);
  Rng rng(61);
  for (auto& v : img.pix) v = static_cast<float>(rng.uniform01());
  const CameraModel cam = CameraModel::paper_like(1.6);

  const CountMap one = accumulate_frames(img, cam, 1, 99);
  const Frame f = simulate_frame(img, cam, stream_seed(99, 0));
  for (size_t i = 0; i < one.size(); ++i) CHECK(one.counts[i] == f.bits[i]);

  const int n = 64;
  const CountMap acc = accumulate_frames(img, cam, n, 99);
  for (int v : acc.counts) {
    CHECK(v >= 0);
    CHECK(v <= n);
  }
}

TEST_CASE("accumulated per-pixel means match the Bernoulli rate within 3 sigma") {
  CameraModel cam = CameraModel::paper_like(1.6);
  cam.dark_rate = 0.0;
  cam.sigma_read = 0.0;
  const Image uniform(28, 28, 1.f);
  const int n = 4096;
  const CountMap acc = accumulate_frames(uniform, cam, n, 1234);
  const double p = 1.0 - std::exp(-1.6);
  const double se = std::sqrt(p * (1.0 - p) / n);
  // average the per-pixel estimate over the plane as well
  double mean = 0.0;
  for (int v : acc.counts) mean += static_cast<double>(v) / n;
  mean /= static_cast<double>(acc.size());
  CHECK(std::fabs(mean - p) < 3.0 * se);
}

TEST_CASE("distinct stream seeds give uncorrelated frames") {
  const Image uniform(28, 28, 1.f);
  CameraModel cam = CameraModel::paper_like(1.6);
  std::vector<int> a, b;
  for (int k = 0; k < 128; ++k) {  // 1e5 pixel pairs
    const Frame fa = simulate_frame(uniform, cam, stream_seed(5000, 2 * k));
    const Frame fb = simulate_frame(uniform, cam, stream_seed(5000, 2 * k + 1));
    for (uint8_t v : fa.bits) a.push_back(v);
    for (uint8_t v : fb.bits) b.push_back(v);
  }
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0, va = 0, vb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    cov += (a[i] - ma) * (b[i] - mb);
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
  }
  const double corr = cov / std::sqrt(va * vb);
  CHECK(std::fabs(corr) < 0.01);
}

TEST_CASE("camera model validation") {
  CameraModel cam;
  cam.quantum_efficiency = 1.5;
  CHECK_THROWS_AS(cam.validate(), std::invalid_argument);
  cam = CameraModel{};
  cam.gain = 0.0;
  CHECK_THROWS_AS(cam.validate(), std::invalid_argument);
}

}  // TEST_SUITE

TEST_SUITE("poisson_sampler") {

TEST_CASE("lambda 0 always yields 0; negative lambda is rejected") {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(rng.poisson(0.0) == 0);
  CHECK_THROWS_AS(rng.poisson(-0.1), std::invalid_argument);
}

TEST_CASE("moments at lambda 1.6 over 1e6 draws") {
  Rng rng(42);
  const int n = 1'000'000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(rng.poisson(1.6));
    sum += k;
    sumsq += k * k;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean - 1.6) < 0.005);
  CHECK(std::fabs(var - 1.6) / 1.6 < 0.015);
}

TEST_CASE("moments in the transformed-rejection regime (lambda 50)") {
  Rng rng(43);
  const int n = 400'000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(rng.poisson(50.0));
    sum += k;
    sumsq += k * k;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  // 3 sigma bounds: se(mean) = sqrt(50/n), se(var) ~ sqrt(2*50^2/n)
  CHECK(std::fabs(mean - 50.0) < 3.0 * std::sqrt(50.0 / n));
  CHECK(std::fabs(var - 50.0) / 50.0 < 0.02);
}

TEST_CASE("binomial thinning of Poisson(4.0) matches Poisson(0.4)") {
  Rng rng(44);
  const int n = 100'000;
  // bins 0..4 and >=5
  std::vector<int> counts(6, 0);
  for (int i = 0; i < n; ++i) {
    const int64_t k = rng.binomial(rng.poisson(4.0), 0.1);
    counts[std::min<int64_t>(k, 5)]++;
  }
  double chi2 = 0.0;
  double tail_p = 1.0;
  for (int k = 0; k < 5; ++k) {
    const double pk = oracle::poisson_pmf(k, 0.4);
    tail_p -= pk;
    const double expected = n * pk;
    chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  const double expected_tail = n * tail_p;
  chi2 += (counts[5] - expected_tail) * (counts[5] - expected_tail) / expected_tail;
  const double p_value = oracle::chi2_pvalue(chi2, 5);
  CHECK(p_value > 0.01);
}

TEST_CASE("stream seeds are spread out") {
  CHECK(stream_seed(0, 0) != stream_seed(0, 1));
  CHECK(stream_seed(0, 0) != stream_seed(1, 0));
  CHECK(splitmix64(1) != splitmix64(2));
}

}  // TEST_SUITE
