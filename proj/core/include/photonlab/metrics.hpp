#pragma once

#include <string>
#include <vector>

#include "photonlab/image.hpp"

namespace photonlab {

enum class ContrastMode {
  Literal,  // global max/min pixel
  Robust,   // 99th/1st percentiles
};

/// Image contrast (I_max - I_min) / (I_max + I_min) in [0,1]. Throws on
/// all-zero images (undefined 0/0) and on negative pixels.
double contrast(const Image& img, ContrastMode mode = ContrastMode::Literal);

/// Mean squared difference; shapes must match.
double mse(const Image& img, const Image& truth);

/// Copy of one image row.
std::vector<float> line_profile(const Image& img, int row_index);
void write_profile_csv(const std::string& path, const std::vector<float>& row);

struct ImageScore {
  int index = 0;
  double contrast = 0.0;
  double mse = 0.0;
};

struct MethodAggregates {
  double mean_contrast = 0.0;
  double median_contrast = 0.0;
  double std_contrast = 0.0;
  double mean_mse = 0.0;
  double median_mse = 0.0;
  double std_mse = 0.0;
};

struct MethodReport {
  std::string name;
  std::vector<ImageScore> per_image;
  MethodAggregates aggregates;
};

struct EvalReport {
  std::vector<MethodReport> methods;
};

struct MethodRecons {
  std::string name;
  std::vector<Image> recons;
};

/// Per-image contrast and MSE for each method against the shared truths,
/// plus aggregates. Ordering is deterministic (input order).
EvalReport compare_methods(const std::vector<MethodRecons>& methods,
                           const std::vector<Image>& truths,
                           ContrastMode mode = ContrastMode::Literal);

MethodAggregates aggregate_scores(const std::vector<ImageScore>& scores);

void write_report_json(const std::string& path, const EvalReport& report);
void write_report_csv(const std::string& path, const EvalReport& report);

}  // namespace photonlab
