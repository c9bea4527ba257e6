#include "photonlab/tv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace photonlab {

void TvConfig::validate() const {
  if (tv_weight < 0) throw std::invalid_argument("tv: tv_weight must be >= 0");
  if (background <= 0) throw std::invalid_argument("tv: background must be > 0");
  if (gain <= 0) throw std::invalid_argument("tv: gain must be > 0");
  if (max_outer_iters < 1 || inner_prox_iters < 1)
    throw std::invalid_argument("tv: iteration counts must be >= 1");
  if (tolerance <= 0) throw std::invalid_argument("tv: tolerance must be > 0");
  if (alpha_min <= 0 || alpha_max < alpha_min)
    throw std::invalid_argument("tv: bad step-size bounds");
}

void write_trace_csv(const std::string& path, const SolveTrace& trace) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << "iteration,objective,step,backtracks\n";
  char buf[128];
  for (const TraceRow& r : trace.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%d\n", r.iteration, r.objective,
                  r.step, r.backtracks);
    os << buf;
  }
}

NllResult poisson_nll(const std::vector<double>& x, const CountMap& y,
                      const TvConfig& cfg) {
  if (x.size() != y.size())
    throw std::invalid_argument("poisson_nll: x and y sizes differ");
  const double g = cfg.gain, b = cfg.background;
  NllResult res;
  res.grad.resize(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0)
      throw std::invalid_argument("poisson_nll: negative intensity at element " +
                                  std::to_string(i));
    const double model = g * x[i] + b;
    const double yi = static_cast<double>(y.counts[i]);
    res.value += model - yi * std::log(model);
    res.grad[i] = g * (1.0 - yi / model);
  }
  return res;
}

double tv_seminorm(const std::vector<double>& x, int h, int w) {
  double acc = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const size_t p = static_cast<size_t>(i) * w + j;
      const double dh = i + 1 < h ? x[p + w] - x[p] : 0.0;
      const double dw = j + 1 < w ? x[p + 1] - x[p] : 0.0;
      acc += std::sqrt(dh * dh + dw * dw);
    }
  return acc;
}

namespace {

// div(p)(i,j) = px(i,j) - px(i,j-1) + py(i,j) - py(i-1,j), the negative
// adjoint of the forward-difference gradient.
void divergence(const std::vector<double>& px, const std::vector<double>& py, int h,
                int w, std::vector<double>& out) {
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      const size_t p = static_cast<size_t>(i) * w + j;
      double d = px[p] + py[p];
      if (j > 0) d -= px[p - 1];
      if (i > 0) d -= py[p - w];
      out[p] = d;
    }
}

}  // namespace

std::vector<double> tv_prox(const std::vector<double>& v, int h, int w, double weight,
                            int inner_iters) {
  if (static_cast<size_t>(h) * w != v.size())
    throw std::invalid_argument("tv_prox: dims do not match data");
  if (weight <= 0.0) return v;

  const size_t n = v.size();
  std::vector<double> px(n, 0.0), py(n, 0.0), div(n, 0.0), u(n, 0.0);
  const double tau = 0.25;
  for (int it = 0; it < inner_iters; ++it) {
    divergence(px, py, h, w, div);
    for (size_t i = 0; i < n; ++i) u[i] = div[i] - v[i] / weight;
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const size_t p = static_cast<size_t>(i) * w + j;
        const double gx = j + 1 < w ? u[p + 1] - u[p] : 0.0;
        const double gy = i + 1 < h ? u[p + w] - u[p] : 0.0;
        const double denom = 1.0 + tau * std::sqrt(gx * gx + gy * gy);
        px[p] = (px[p] + tau * gx) / denom;
        py[p] = (py[p] + tau * gy) / denom;
      }
  }
  divergence(px, py, h, w, div);
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i) x[i] = v[i] - weight * div[i];
  return x;
}

CountMap counts_from_image(const Image& img) {
  CountMap m(img.height, img.width);
  for (size_t i = 0; i < img.size(); ++i) {
    const float v = img.pix[i];
    if (v < 0)
      throw std::invalid_argument("counts: negative value at element " + std::to_string(i));
    const float r = std::nearbyint(v);
    if (v != r)
      throw std::invalid_argument("counts: non-integer value " + std::to_string(v) +
                                  " at element " + std::to_string(i));
    m.counts[i] = static_cast<int32_t>(r);
  }
  return m;
}

TvResult reconstruct_tv(const CountMap& y, const TvConfig& cfg) {
  cfg.validate();
  const int h = y.height, w = y.width;
  const size_t n = y.size();
  for (size_t i = 0; i < n; ++i)
    if (y.counts[i] < 0)
      throw std::invalid_argument("reconstruct_tv: negative count at element " +
                                  std::to_string(i));

  const double lambda = cfg.tv_weight;
  std::vector<double> x(n);
  for (size_t i = 0; i < n; ++i)
    x[i] = std::max(0.0, (static_cast<double>(y.counts[i]) - cfg.background) / cfg.gain);

  NllResult nll = poisson_nll(x, y, cfg);
  double obj = nll.value + lambda * tv_seminorm(x, h, w);

  SolveTrace trace;
  trace.rows.push_back({0, obj, 0.0, 0});

  // acceptance margin for the quadratic-majorizer backtracking
  const double sigma = 0.1;
  double alpha = 1.0;
  std::vector<double> cand(n), s(n);

  for (int k = 1; k <= cfg.max_outer_iters; ++k) {
    double alpha_try = alpha;
    int backtracks = 0;
    bool accepted = false;
    NllResult cand_nll;
    double cand_obj = 0.0, dx2 = 0.0;
    for (;;) {
      for (size_t i = 0; i < n; ++i) cand[i] = x[i] - nll.grad[i] / alpha_try;
      cand = tv_prox(cand, h, w, lambda / alpha_try, cfg.inner_prox_iters);
      for (size_t i = 0; i < n; ++i) cand[i] = std::max(0.0, cand[i]);
      cand_nll = poisson_nll(cand, y, cfg);
      cand_obj = cand_nll.value + lambda * tv_seminorm(cand, h, w);
      dx2 = 0.0;
      for (size_t i = 0; i < n; ++i) {
        const double d = cand[i] - x[i];
        dx2 += d * d;
      }
      if (cand_obj <= obj - 0.5 * sigma * alpha_try * dx2) {
        accepted = true;
        break;
      }
      if (backtracks >= cfg.max_backtracks) break;
      alpha_try *= 2.0;
      ++backtracks;
    }
    if (!accepted) break;

    double sz = 0.0, ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      s[i] = cand[i] - x[i];
      const double z = cand_nll.grad[i] - nll.grad[i];
      sz += s[i] * z;
      ss += s[i] * s[i];
    }
    const double rel = std::fabs(obj - cand_obj) / std::max(1e-300, std::fabs(obj));
    x.swap(cand);
    obj = cand_obj;
    nll = std::move(cand_nll);
    trace.rows.push_back({k, obj, 1.0 / alpha_try, backtracks});

    alpha = (sz > 0 && ss > 0) ? std::clamp(sz / ss, cfg.alpha_min, cfg.alpha_max)
                               : alpha_try;
    if (rel < cfg.tolerance) break;
  }

  TvResult res;
  res.recon = Image(h, w);
  for (size_t i = 0; i < n; ++i) res.recon.pix[i] = static_cast<float>(x[i]);
  res.trace = std::move(trace);
  return res;
}

}  // namespace photonlab
