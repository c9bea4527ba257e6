#include "photonlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace photonlab {

using json = nlohmann::json;

namespace {

double percentile(std::vector<float> sorted_values, double q) {
  // linear interpolation between closest ranks
  const size_t n = sorted_values.size();
  const double pos = q * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * sorted_values[lo] + frac * sorted_values[hi];
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double contrast(const Image& img, ContrastMode mode) {
  if (img.size() == 0) throw std::invalid_argument("contrast: empty image");
  double imax, imin;
  if (mode == ContrastMode::Literal) {
    imax = *std::max_element(img.pix.begin(), img.pix.end());
    imin = *std::min_element(img.pix.begin(), img.pix.end());
  } else {
    std::vector<float> sorted = img.pix;
    std::sort(sorted.begin(), sorted.end());
    imin = percentile(sorted, 0.01);
    imax = percentile(std::move(sorted), 0.99);
  }
  if (imin < 0) throw std::invalid_argument("contrast: image must be nonnegative");
  const double denom = imax + imin;
  if (denom <= 0)
    throw std::invalid_argument("contrast: undefined for an all-zero image");
  return (imax - imin) / denom;
}

double mse(const Image& img, const Image& truth) {
  if (img.height != truth.height || img.width != truth.width)
    throw std::invalid_argument("mse: shape mismatch " + std::to_string(img.height) + "x" +
                                std::to_string(img.width) + " vs " +
                                std::to_string(truth.height) + "x" +
                                std::to_string(truth.width));
  double acc = 0.0;
  for (size_t i = 0; i < img.size(); ++i) {
    const double d = static_cast<double>(img.pix[i]) - static_cast<double>(truth.pix[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(img.size());
}

std::vector<float> line_profile(const Image& img, int row_index) {
  if (row_index < 0 || row_index >= img.height)
    throw std::invalid_argument("line_profile: row " + std::to_string(row_index) +
                                " out of range [0," + std::to_string(img.height) + ")");
  return std::vector<float>(img.pix.begin() + static_cast<size_t>(row_index) * img.width,
                            img.pix.begin() + static_cast<size_t>(row_index + 1) * img.width);
}

void write_profile_csv(const std::string& path, const std::vector<float>& row) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << "column,value\n";
  char buf[64];
  for (size_t i = 0; i < row.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.9g\n", i, row[i]);
    os << buf;
  }
}

MethodAggregates aggregate_scores(const std::vector<ImageScore>& scores) {
  MethodAggregates agg;
  if (scores.empty()) return agg;
  std::vector<double> contrasts, mses;
  contrasts.reserve(scores.size());
  mses.reserve(scores.size());
  for (const auto& s : scores) {
    contrasts.push_back(s.contrast);
    mses.push_back(s.mse);
  }
  const double n = static_cast<double>(scores.size());
  for (double c : contrasts) agg.mean_contrast += c;
  for (double m : mses) agg.mean_mse += m;
  agg.mean_contrast /= n;
  agg.mean_mse /= n;
  for (double c : contrasts) agg.std_contrast += (c - agg.mean_contrast) * (c - agg.mean_contrast);
  for (double m : mses) agg.std_mse += (m - agg.mean_mse) * (m - agg.mean_mse);
  agg.std_contrast = std::sqrt(agg.std_contrast / n);
  agg.std_mse = std::sqrt(agg.std_mse / n);
  agg.median_contrast = median_of(contrasts);
  agg.median_mse = median_of(mses);
  return agg;
}

EvalReport compare_methods(const std::vector<MethodRecons>& methods,
                           const std::vector<Image>& truths, ContrastMode mode) {
  EvalReport report;
  for (const auto& method : methods) {
    if (method.recons.size() != truths.size())
      throw std::invalid_argument("compare_methods: method '" + method.name + "' has " +
                                  std::to_string(method.recons.size()) +
                                  " recons for " + std::to_string(truths.size()) +
                                  " truths");
    MethodReport mr;
    mr.name = method.name;
    for (size_t i = 0; i < truths.size(); ++i) {
      ImageScore score;
      score.index = static_cast<int>(i);
      score.contrast = contrast(method.recons[i], mode);
      score.mse = mse(method.recons[i], truths[i]);
      mr.per_image.push_back(score);
    }
    mr.aggregates = aggregate_scores(mr.per_image);
    report.methods.push_back(std::move(mr));
  }
  return report;
}

void write_report_json(const std::string& path, const EvalReport& report) {
  json j;
  j["methods"] = json::array();
  for (const auto& m : report.methods) {
    json jm;
    jm["name"] = m.name;
    jm["per_image"] = json::array();
    for (const auto& s : m.per_image)
      jm["per_image"].push_back({{"index", s.index}, {"contrast", s.contrast}, {"mse", s.mse}});
    jm["aggregates"] = {{"mean_contrast", m.aggregates.mean_contrast},
                        {"median_contrast", m.aggregates.median_contrast},
                        {"std_contrast", m.aggregates.std_contrast},
                        {"mean_mse", m.aggregates.mean_mse},
                        {"median_mse", m.aggregates.median_mse},
                        {"std_mse", m.aggregates.std_mse}};
    j["methods"].push_back(std::move(jm));
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << j.dump(2) << "\n";
}

void write_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << "method,index,contrast,mse\n";
  char buf[160];
  for (const auto& m : report.methods)
    for (const auto& s : m.per_image) {
      std::snprintf(buf, sizeof(buf), "%s,%d,%.12g,%.12g\n", m.name.c_str(), s.index,
                    s.contrast, s.mse);
      os << buf;
    }
}

}  // namespace photonlab
