// Acceptance suite: one pass/fail line per criterion. Heavy pipeline
// criteria run the same experiment code the CLI uses; the determinism
// criterion drives the installed binary itself.
//
// Usage: photonlab_acceptance [N]   (N = 1..8; no argument runs all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "photonlab/cae.hpp"
#include "photonlab/conv.hpp"
#include "photonlab/experiment.hpp"
#include "photonlab/image_io.hpp"
#include "photonlab/loss.hpp"
#include "photonlab/metrics.hpp"
#include "photonlab/photon_sim.hpp"
#include "photonlab/pool.hpp"
#include "photonlab/rng.hpp"
#include "photonlab/synth.hpp"
#include "photonlab/tv.hpp"
#include "photonlab/upsample.hpp"

using namespace photonlab;
namespace fs = std::filesystem;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

// ---------- shared helpers ----------

TensorD random_tensor_d(std::vector<int> shape, Rng& rng, double lo = -1.0,
                        double hi = 1.0) {
  TensorD t(std::move(shape));
  for (auto& v : t.values()) v = lo + (hi - lo) * rng.uniform01();
  return t;
}

double project(const TensorD& t, const TensorD& w) {
  double acc = 0;
  for (size_t i = 0; i < t.size(); ++i) acc += t[i] * w[i];
  return acc;
}

std::vector<double> finite_difference(std::vector<double>& params,
                                      const std::function<double()>& eval,
                                      double step = 1e-5) {
  std::vector<double> grad(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    params[i] = saved + step;
    const double fp = eval();
    params[i] = saved - step;
    const double fm = eval();
    params[i] = saved;
    grad[i] = (fp - fm) / (2.0 * step);
  }
  return grad;
}

double max_rel_error(const std::vector<double>& analytic,
                     const std::vector<double>& numeric, double floor = 1e-6) {
  double worst = 0;
  for (size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), floor});
    worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / scale);
  }
  return worst;
}

bool pool_windows_separated(const TensorD& t, double gap = 1e-3) {
  const int bs = t.extent(0), ch = t.extent(1), h = t.extent(2), w = t.extent(3);
  for (int b = 0; b < bs; ++b)
    for (int c = 0; c < ch; ++c)
      for (int y = 0; y < (h + 1) / 2; ++y)
        for (int x = 0; x < (w + 1) / 2; ++x) {
          double best = -1e30, second = -1e30;
          for (int iy = 2 * y; iy < std::min(2 * y + 2, h); ++iy)
            for (int ix = 2 * x; ix < std::min(2 * x + 2, w); ++ix) {
              const double v = t.at4(b, c, iy, ix);
              if (v > best) {
                second = best;
                best = v;
              } else {
                second = std::max(second, v);
              }
            }
          if (second > -1e29 && best - second < gap) return false;
        }
  return true;
}

double gamma_series_p(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int i = 0; i < 500; ++i) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_contfrac_q(double a, double x) {
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, hval = d;
  for (int i = 1; i <= 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    hval *= delta;
    if (std::fabs(delta - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * hval;
}

double chi2_pvalue(double chi2, int df) {
  const double a = 0.5 * df, x = 0.5 * chi2;
  if (x <= 0) return 1.0;
  return x < a + 1.0 ? 1.0 - gamma_series_p(a, x) : gamma_contfrac_q(a, x);
}

double poisson_pmf(int k, double lambda) {
  return std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v.size() % 2 ? v[v.size() / 2] : 0.5 * (v[v.size() / 2 - 1] + v[v.size() / 2]);
}

// ---------- criterion 1: gradient suite ----------

bool criterion1(std::string& detail) {
  const double t0 = now_seconds();
  Rng rng(20260809);
  double worst_kernel = 0.0;

  for (int trial = 0; trial < 100; ++trial) {
    {  // conv: kernels, bias and input
      const TensorD input = random_tensor_d({1, 2, 5, 6}, rng);
      ConvLayerT<double> layer(2, 3);
      for (auto& v : layer.kernels.values()) v = rng.uniform01() * 2 - 1;
      for (auto& v : layer.bias.values()) v = rng.uniform01() * 2 - 1;
      const TensorD proj = random_tensor_d({1, 3, 5, 6}, rng);
      const auto analytic = conv2d_backward(proj, input, layer);

      TensorD in_copy = input;
      ConvLayerT<double> layer_copy = layer;
      auto eval = [&]() { return project(conv2d_same(in_copy, layer_copy), proj); };
      worst_kernel = std::max(
          worst_kernel, max_rel_error(analytic.kernels.values(),
                                      finite_difference(layer_copy.kernels.values(), eval)));
      worst_kernel = std::max(
          worst_kernel, max_rel_error(analytic.bias.values(),
                                      finite_difference(layer_copy.bias.values(), eval)));
      worst_kernel = std::max(
          worst_kernel,
          max_rel_error(analytic.input.values(), finite_difference(in_copy.values(), eval)));
    }
    {  // maxpool, away from window ties
      TensorD input = random_tensor_d({1, 2, 5, 5}, rng);
      while (!pool_windows_separated(input)) input = random_tensor_d({1, 2, 5, 5}, rng);
      const TensorD proj = random_tensor_d({1, 2, 3, 3}, rng);
      const auto fwd = maxpool_2x2_ceil(input);
      const TensorD analytic = maxpool_backward(proj, fwd.indices, input.shape());
      auto eval = [&]() { return project(maxpool_2x2_ceil(input).output, proj); };
      worst_kernel = std::max(worst_kernel,
                              max_rel_error(analytic.values(),
                                            finite_difference(input.values(), eval)));
    }
    {  // upsample
      TensorD input = random_tensor_d({1, 2, 4, 4}, rng);
      const TensorD proj = random_tensor_d({1, 2, 7, 7}, rng);
      const TensorD analytic = upsample_backward(proj, 4, 4);
      auto eval = [&]() { return project(upsample_nearest_to(input, 7, 7), proj); };
      worst_kernel = std::max(worst_kernel,
                              max_rel_error(analytic.values(),
                                            finite_difference(input.values(), eval)));
    }
    {  // relu away from the kink, sigmoid, mse
      TensorD input = random_tensor_d({1, 1, 4, 4}, rng);
      for (auto& v : input.values())
        if (std::fabs(v) < 1e-3) v = 0.25;
      const TensorD proj = random_tensor_d({1, 1, 4, 4}, rng);
      {
        const TensorD analytic = relu_backward(proj, input);
        auto eval = [&]() { return project(relu(input), proj); };
        worst_kernel = std::max(worst_kernel,
                                max_rel_error(analytic.values(),
                                              finite_difference(input.values(), eval)));
      }
      {
        const TensorD y = sigmoid(input);
        const TensorD analytic = sigmoid_backward(proj, y);
        auto eval = [&]() { return project(sigmoid(input), proj); };
        worst_kernel = std::max(worst_kernel,
                                max_rel_error(analytic.values(),
                                              finite_difference(input.values(), eval)));
      }
      {
        TensorD pred = random_tensor_d({1, 1, 4, 4}, rng);
        const TensorD target = random_tensor_d({1, 1, 4, 4}, rng);
        const auto res = mse_loss(pred, target);
        auto eval = [&]() { return mse_loss(pred, target).value; };
        worst_kernel = std::max(worst_kernel,
                                max_rel_error(res.grad.values(),
                                              finite_difference(pred.values(), eval)));
      }
    }
  }

  // whole tiny model: every kernel and bias of an 8x8, 4-channel variant.
  // The FD probe is only valid away from relu kinks and pool ties, so pick a
  // weight seed whose forward pass keeps clear margins around both.
  const auto model_margin = [](const CaeWeightsT<double>& w, const TensorD& in) {
    double margin = 1e30;
    TensorD x = in;
    const auto targets = w.arch.decoder_targets();
    const size_t n_enc = w.arch.encoder_channels.size();
    for (size_t s = 0; s < n_enc; ++s) {
      TensorD c = conv2d_same(x, w.layers[s]);
      for (double v : c.values()) margin = std::min(margin, std::fabs(v));
      TensorD r = relu(c);
      if (!pool_windows_separated(r, 1e-3)) return 0.0;
      x = maxpool_2x2_ceil(r).output;
    }
    for (size_t s = 0; s < w.arch.decoder_channels.size(); ++s) {
      x = upsample_nearest_to(x, targets[s].first, targets[s].second);
      TensorD c = conv2d_same(x, w.layers[n_enc + s]);
      for (double v : c.values()) margin = std::min(margin, std::fabs(v));
      x = relu(c);
    }
    return margin;
  };

  double worst_model = 0.0;
  {
    const CaeArchitecture arch = make_custom_architecture(8, 8, {4, 4}, {4, 4});
    const TensorD input = random_tensor_d({1, 1, 8, 8}, rng, 0.0, 1.0);
    const TensorD target = random_tensor_d({1, 1, 8, 8}, rng, 0.0, 1.0);
    CaeWeightsT<double> weights = init_weights(arch, 11).cast<double>();
    for (uint64_t seed = 11; model_margin(weights, input) < 1e-3 && seed < 64; ++seed)
      weights = init_weights(arch, seed).cast<double>();
    const auto analytic = cae_loss_and_gradients(weights, input, target);
    auto eval = [&]() { return cae_loss_and_gradients(weights, input, target).loss; };
    for (size_t l = 0; l < weights.layers.size(); ++l) {
      worst_model = std::max(
          worst_model, max_rel_error(analytic.kernel_grads[l].values(),
                                     finite_difference(weights.layers[l].kernels.values(), eval)));
      worst_model = std::max(
          worst_model, max_rel_error(analytic.bias_grads[l].values(),
                                     finite_difference(weights.layers[l].bias.values(), eval)));
    }
  }

  const double elapsed = now_seconds() - t0;
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "kernel max rel err %.3g (< 1e-4), whole-model %.3g (< 1e-3), %.0f s (< 120)",
                worst_kernel, worst_model, elapsed);
  detail = buf;
  return worst_kernel < 1e-4 && worst_model < 1e-3 && elapsed < 120.0;
}

// ---------- criterion 2: Poisson statistics ----------

bool criterion2(std::string& detail) {
  Rng rng(42);
  const int n = 1'000'000;
  double sum = 0, sumsq = 0;
  for (int i = 0; i < n; ++i) {
    const double k = static_cast<double>(rng.poisson(1.6));
    sum += k;
    sumsq += k * k;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;

  Rng rng2(44);
  const int m = 100'000;
  std::vector<int> counts(6, 0);
  for (int i = 0; i < m; ++i) {
    const int64_t k = rng2.binomial(rng2.poisson(4.0), 0.1);
    counts[std::min<int64_t>(k, 5)]++;
  }
  double chi2 = 0, tail = 1.0;
  for (int k = 0; k < 5; ++k) {
    const double pk = poisson_pmf(k, 0.4);
    tail -= pk;
    const double expected = m * pk;
    chi2 += (counts[k] - expected) * (counts[k] - expected) / expected;
  }
  chi2 += (counts[5] - m * tail) * (counts[5] - m * tail) / (m * tail);
  const double p = chi2_pvalue(chi2, 5);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "|mean-1.6| = %.4g (< 0.005), |var-1.6|/1.6 = %.3g%% (< 1.5%%), thinning p = %.3f (> 0.01)",
                std::fabs(mean - 1.6), 100 * std::fabs(var - 1.6) / 1.6, p);
  detail = buf;
  return std::fabs(mean - 1.6) < 0.005 && std::fabs(var - 1.6) / 1.6 < 0.015 && p > 0.01;
}

// ---------- criterion 3: TV solver ----------

bool criterion3(std::string& detail) {
  const CameraModel cam = CameraModel::paper_like(1.6);
  bool monotone = true;
  std::vector<double> solve_seconds;
  for (int i = 0; i < 50; ++i) {
    const Frame f = simulate_frame(render_digit(i % 10, 3000 + i), cam, 4000 + i);
    const double t0 = now_seconds();
    const TvResult res = reconstruct_tv(CountMap::from_frame(f), TvConfig{});
    solve_seconds.push_back(now_seconds() - t0);
    for (size_t k = 1; k < res.trace.rows.size(); ++k)
      if (res.trace.rows[k].objective > res.trace.rows[k - 1].objective + 1e-9)
        monotone = false;
  }
  std::sort(solve_seconds.begin(), solve_seconds.end());
  const double median_s = solve_seconds[25];
  const double p90_s = solve_seconds[45];

  double worst_err = 0.0;
  for (int i = 0; i < 5; ++i) {
    const Image truth = render_digit(i, 5000 + i);
    CountMap y(28, 28);
    for (size_t k = 0; k < y.size(); ++k)
      y.counts[k] = static_cast<int32_t>(std::lround(50.0 * truth.pix[k]));
    TvConfig cfg;
    cfg.tv_weight = 1e-4;
    cfg.gain = 50.0;
    const double t0 = now_seconds();
    const TvResult res = reconstruct_tv(y, cfg);
    solve_seconds.push_back(now_seconds() - t0);
    for (size_t k = 0; k < y.size(); ++k)
      worst_err = std::max(worst_err,
                           static_cast<double>(std::fabs(res.recon.pix[k] - truth.pix[k])));
  }

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "monotone %s, recovery max err %.3f (< 0.05), median %.2f s p90 %.2f s (< 1)",
                monotone ? "yes" : "NO", worst_err, median_s, p90_s);
  detail = buf;
  return monotone && worst_err < 0.05 && median_s < 1.0 && p90_s < 1.0;
}

// ---------- criteria 4 and 5: desk-scale reproduction ----------

ExperimentConfig protocol_config(double mu, const std::string& out_dir) {
  ExperimentConfig cfg;
  cfg.synthetic_count = 2200;
  cfg.train_count = 2000;
  cfg.test_count = 200;
  cfg.camera = CameraModel::paper_like(mu);
  cfg.cae_depth = 7;
  cfg.train.epochs = 100;
  cfg.train.batch_size = 64;
  cfg.train.learning_rate = 1e-3;
  cfg.train.weight_decay = 0.0;
  cfg.train.eval_cadence = 20;
  cfg.seed = 1905;
  cfg.jobs = 0;
  cfg.out_dir = out_dir;
  return cfg;
}

bool criterion4(std::string& detail) {
  const double t0 = now_seconds();
  const BenchResult r = run_bench(protocol_config(1.6, "acceptance_out/c4"));
  const double hours = (now_seconds() - t0) / 3600.0;
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "cae median contrast %.3f (>= 0.9), tv median contrast %.3f (<= 0.6), "
                "cae median mse %.4f < tv %.4f, %.2f h (< 2)",
                r.cae.median_contrast, r.tv.median_contrast, r.cae.median_mse,
                r.tv.median_mse, hours);
  detail = buf;
  return r.cae.median_contrast >= 0.9 && r.tv.median_contrast <= 0.6 &&
         r.cae.median_mse < r.tv.median_mse && hours < 2.0;
}

bool criterion5(std::string& detail) {
  const BenchResult r = run_bench(protocol_config(0.8, "acceptance_out/c5"));
  const bool panel_ok = fs::exists(r.panel_path) && fs::file_size(r.panel_path) > 0;
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "cae median contrast %.3f (>= 0.8), eyeball panel %s (inspect %s)",
                r.cae.median_contrast, panel_ok ? "written" : "MISSING",
                r.panel_path.c_str());
  detail = buf;
  return r.cae.median_contrast >= 0.8 && panel_ok;
}

// ---------- criterion 6: depth study ----------

bool criterion6(std::string& detail) {
  fs::create_directories("acceptance_out/c6");
  const CameraModel cam = CameraModel::paper_like(1.6);
  const SyntheticSet set = synthetic_digits(1000, stream_seed(1905, 61));
  std::vector<TrainPair> pairs;
  for (size_t i = 0; i < set.images.size(); ++i) {
    const Frame f = simulate_frame(set.images[i], cam, stream_seed(1905, 1000 + i));
    pairs.push_back({f.as_image(), set.images[i]});
  }

  std::string parts;
  bool ok = true;
  double depth5_tail_change = 0.0;
  for (int depth : {5, 7, 9}) {
    TrainConfig cfg;
    cfg.epochs = 200;
    cfg.batch_size = 64;
    cfg.eval_cadence = 200;
    cfg.shuffle_seed = stream_seed(1905, 10 + depth);
    const auto [weights, history] =
        train_cae(pairs, {}, build_architecture(depth), cfg, stream_seed(1905, 20 + depth), 0);
    char name[96];
    std::snprintf(name, sizeof(name), "acceptance_out/c6/history_depth%d.csv", depth);
    write_history_csv(name, history);

    const double first = history.records.front().train_mse;
    const double last = history.records.back().train_mse;
    const bool halved = last <= 0.5 * first;
    ok = ok && halved;
    char part[160];
    std::snprintf(part, sizeof(part), "d%d: %.4g -> %.4g (%s)", depth, first, last,
                  halved ? "halved" : "NOT halved");
    parts += std::string(parts.empty() ? "" : "; ") + part;

    if (depth == 5) {
      const double at181 = history.records[180].train_mse;
      const double at200 = history.records[199].train_mse;
      depth5_tail_change = std::fabs(at200 - at181) / at181;
    }
  }
  const bool plateau = depth5_tail_change < 0.01;
  ok = ok && plateau;
  char buf[420];
  std::snprintf(buf, sizeof(buf), "%s; depth-5 last-20-epoch change %.3g%% (< 1%%)",
                parts.c_str(), 100 * depth5_tail_change);
  detail = buf;
  return ok;
}

// ---------- criterion 7: real-time proxy ----------

bool criterion7(std::string& detail) {
  const CaeWeights weights = init_weights(build_architecture(7), 1);
  const Image frame = simulate_frame(render_digit(5, 7100), CameraModel::paper_like(1.6), 7101)
                          .as_image();
  std::vector<double> cae_times;
  (void)cae_infer(weights, frame, 2);  // warm the worker pool
  for (int r = 0; r < 25; ++r) {
    const double t0 = now_seconds();
    volatile float sink = cae_infer(weights, frame, 2).pix[0];
    (void)sink;
    cae_times.push_back(now_seconds() - t0);
  }
  const double cae_s = median_of(cae_times);

  const CountMap y = CountMap::from_frame(
      simulate_frame(render_digit(6, 7200), CameraModel::paper_like(1.6), 7201));
  std::vector<double> tv_times;
  for (int r = 0; r < 5; ++r) {
    const double t0 = now_seconds();
    volatile float sink = reconstruct_tv(y, TvConfig{}).recon.pix[0];
    (void)sink;
    tv_times.push_back(now_seconds() - t0);
  }
  const double tv_s = median_of(tv_times);

  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "cae inference %.2f ms (< 50), tv solve %.0f ms, ratio %.0fx (>= 100)",
                1e3 * cae_s, 1e3 * tv_s, tv_s / cae_s);
  detail = buf;
  return cae_s < 0.050 && tv_s >= 100.0 * cae_s;
}

// ---------- criterion 8: end-to-end determinism ----------

#ifndef PHOTONLAB_CLI_PATH
#define PHOTONLAB_CLI_PATH "photonlab"
#endif

bool criterion8(std::string& detail) {
  const std::string base = "acceptance_out/c8";
  fs::remove_all(base);
  const std::string cmd_tail = " --seed 7207 --jobs 2 --train-count 200 --test-count 20"
                               " --epochs 8 --out ";
  for (const char* run : {"a", "b"}) {
    const std::string cmd = std::string(PHOTONLAB_CLI_PATH) + " bench" + cmd_tail + base +
                            "/" + run + " > /dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      detail = "bench run failed";
      return false;
    }
  }

  // byte-compare every artifact except wall-time files
  size_t compared = 0;
  std::vector<std::string> mismatches;
  for (const auto& entry : fs::recursive_directory_iterator(base + "/a")) {
    if (!entry.is_regular_file()) continue;
    const fs::path rel = fs::relative(entry.path(), base + "/a");
    if (rel.filename() == "history.csv" || rel.filename() == "timings.txt") continue;
    std::ifstream f1(entry.path(), std::ios::binary);
    std::ifstream f2(fs::path(base + "/b") / rel, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    if (rel.filename() == "config.json") {
      // the archived config legitimately differs in its own output path
      const auto strip_out_dir = [](std::string& text) {
        const size_t pos = text.find("\"out_dir\"");
        if (pos == std::string::npos) return;
        const size_t end = text.find('\n', pos);
        text.erase(pos, end == std::string::npos ? text.size() - pos : end - pos);
      };
      strip_out_dir(b1);
      strip_out_dir(b2);
    }
    ++compared;
    if (b1.empty() || b1 != b2) mismatches.push_back(rel.string());
  }

  char buf[320];
  if (mismatches.empty())
    std::snprintf(buf, sizeof(buf),
                  "%zu artifacts byte-identical across reruns (weights, recons, reports)",
                  compared);
  else
    std::snprintf(buf, sizeof(buf), "%zu artifacts compared, first mismatch: %s", compared,
                  mismatches.front().c_str());
  detail = buf;
  return compared > 0 && mismatches.empty();
}

}  // namespace

int main(int argc, char** argv) {
  struct Criterion {
    int id;
    const char* label;
    bool (*run)(std::string&);
  };
  const std::vector<Criterion> criteria = {
      {1, "gradient suite (finite differences)", criterion1},
      {2, "Poisson sampler statistics", criterion2},
      {3, "TV solver: monotonicity, recovery, runtime", criterion3},
      {4, "desk-scale reproduction at 1.6 photons/pixel", criterion4},
      {5, "robustness at 0.8 photons/pixel", criterion5},
      {6, "depth study: 5/7/9-layer training curves", criterion6},
      {7, "real-time proxy: inference vs TV solve", criterion7},
      {8, "end-to-end determinism of bench", criterion8},
  };

  int selected = 0;
  if (argc > 1) selected = std::atoi(argv[1]);

  int failures = 0;
  for (const auto& c : criteria) {
    if (selected != 0 && c.id != selected) continue;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("[%s] criterion %d: %s: %s\n", ok ? "PASS" : "FAIL", c.id, c.label,
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
  return failures;
}
