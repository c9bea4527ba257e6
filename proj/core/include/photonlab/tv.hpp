#pragma once

#include <string>
#include <vector>

#include "photonlab/image.hpp"

namespace photonlab {

/// Configuration of the Poisson + total-variation solver.
struct TvConfig {
  double tv_weight = 10.5;     // regularizer weight lambda
  double background = 0.01;    // model offset b > 0, keeps the log finite at x = 0
  double gain = 1.0;           // forward scalar g in y ~ Poisson(g x + b)
  int max_outer_iters = 300;   // quadratic-approximation steps
  int inner_prox_iters = 40;   // dual projections per TV prox call
  double tolerance = 1e-10;    // relative objective change stop
  double alpha_min = 1e-6;     // Barzilai-Borwein curvature bounds (1/step)
  double alpha_max = 1e12;
  int max_backtracks = 30;

  void validate() const;
};

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  double step = 0.0;  // accepted step size 1/alpha
  int backtracks = 0;
};

/// Accepted-iteration log; objectives are non-increasing by construction.
struct SolveTrace {
  std::vector<TraceRow> rows;
};

void write_trace_csv(const std::string& path, const SolveTrace& trace);

/// Poisson negative log-likelihood F(x) = sum g x + b - y log(g x + b) and its
/// gradient g (1 - y / (g x + b)). x must be elementwise >= 0.
struct NllResult {
  double value = 0.0;
  std::vector<double> grad;
};
NllResult poisson_nll(const std::vector<double>& x, const CountMap& y,
                      const TvConfig& cfg);

/// Isotropic total variation with forward differences, one-sided diffs zero
/// at the last row/column.
double tv_seminorm(const std::vector<double>& x, int h, int w);

/// Approximate prox of weight * TV at v via Chambolle dual projections.
/// weight = 0 returns v unchanged. No nonnegativity clamp here.
std::vector<double> tv_prox(const std::vector<double>& v, int h, int w, double weight,
                            int inner_iters);

/// Validates that an intensity image holds nonnegative integers.
CountMap counts_from_image(const Image& img);

struct TvResult {
  Image recon;
  SolveTrace trace;
};

/// Minimize the Poisson NLL plus weight * TV over x >= 0: Barzilai-Borwein
/// step proposals with backtracking to a quadratic-majorizer acceptance, a
/// TV prox, then projection onto the nonnegative orthant.
TvResult reconstruct_tv(const CountMap& y, const TvConfig& cfg);

}  // namespace photonlab
