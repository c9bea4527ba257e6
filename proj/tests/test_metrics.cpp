#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "photonlab/metrics.hpp"
#include "photonlab/rng.hpp"
#include "test_support.hpp"

using namespace photonlab;
namespace fs = std::filesystem;

namespace {

Image random_image(int h, int w, uint64_t seed, float lo = 0.f, float hi = 1.f) {
  Image img(h, w);
  Rng rng(seed);
  for (auto& v : img.pix) v = lo + (hi - lo) * static_cast<float>(rng.uniform01());
  return img;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("contrast endpoints") {
  Image img(4, 4, 0.f);
  img.at(0, 0) = 1.f;
  CHECK(contrast(img) == 1.0);  // I_max 1, I_min 0

  Image flat(4, 4, 0.42f);
  CHECK(contrast(flat) == 0.0);

  Image band(4, 4, 0.3f);
  band.at(2, 2) = 0.7f;
  CHECK(contrast(band) == doctest::Approx(0.4).epsilon(1e-6));

  CHECK_THROWS_WITH_AS(contrast(Image(4, 4, 0.f)), doctest::Contains("all-zero"),
                       std::invalid_argument);
  Image neg(2, 2, 0.5f);
  neg.at(0, 0) = -0.1f;
  CHECK_THROWS_AS(contrast(neg), std::invalid_argument);
}

TEST_CASE("contrast is scale-invariant and bounded") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    Image img = random_image(8, 8, 100 + trial, 0.01f, 1.f);
    const double c = contrast(img);
    CHECK(c >= 0.0);
    CHECK(c <= 1.0);
    Image scaled = img;
    const float factor = 0.25f + 3.f * static_cast<float>(rng.uniform01());
    for (auto& v : scaled.pix) v *= factor;
    CHECK(contrast(scaled) == doctest::Approx(c).epsilon(1e-6));
  }
}

TEST_CASE("robust mode uses percentiles instead of extrema") {
  Image img(10, 10, 0.5f);
  img.at(0, 0) = 0.f;   // single dark outlier
  img.at(9, 9) = 1.f;   // single bright outlier
  CHECK(contrast(img, ContrastMode::Literal) == 1.0);
  CHECK(contrast(img, ContrastMode::Robust) < 0.35);
}

TEST_CASE("mse basics and the independent two-loop oracle") {
  const Image a(3, 3, 1.f);
  const Image b(3, 3, 0.f);
  CHECK(mse(a, a) == 0.0);
  CHECK(mse(a, b) == 1.0);
  CHECK(mse(a, b) == mse(b, a));
  CHECK_THROWS_WITH_AS(mse(a, Image(3, 4)), doctest::Contains("mismatch"),
                       std::invalid_argument);

  const Image x = random_image(7, 5, 31);
  const Image y = random_image(7, 5, 32);
  double direct = 0.0;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 5; ++c) {
      const double d = static_cast<double>(x.at(r, c)) - static_cast<double>(y.at(r, c));
      direct += d * d;
    }
  direct /= 35.0;
  CHECK(std::fabs(mse(x, y) - direct) < 1e-12);
}

TEST_CASE("line_profile copies one row and validates the index") {
  Image img(6, 6, 0.25f);
  for (int c = 0; c < 6; ++c) img.at(3, c) = c < 3 ? 0.f : 1.f;
  const auto flatrow = line_profile(img, 1);
  for (float v : flatrow) CHECK(v == 0.25f);
  const auto steprow = line_profile(img, 3);
  CHECK(steprow == std::vector<float>{0.f, 0.f, 0.f, 1.f, 1.f, 1.f});
  CHECK_THROWS_AS(line_profile(img, 6), std::invalid_argument);
  CHECK_THROWS_AS(line_profile(img, -1), std::invalid_argument);

  const auto csv = (fs::temp_directory_path() / "profile.csv").string();
  write_profile_csv(csv, steprow);
  std::ifstream is(csv);
  std::string header;
  std::getline(is, header);
  CHECK(header == "column,value");
  fs::remove(csv);
}

TEST_CASE("compare_methods: perfect recon, identical methods, misalignment") {
  std::vector<Image> truths;
  for (int i = 0; i < 5; ++i) truths.push_back(random_image(6, 6, 50 + i, 0.1f, 1.f));

  const EvalReport perfect = compare_methods({{"exact", truths}}, truths);
  CHECK(perfect.methods[0].aggregates.mean_mse == 0.0);
  CHECK(perfect.methods[0].aggregates.median_mse == 0.0);

  const EvalReport twin = compare_methods({{"a", truths}, {"b", truths}}, truths);
  CHECK(twin.methods[0].aggregates.mean_contrast ==
        twin.methods[1].aggregates.mean_contrast);
  CHECK(twin.methods[0].aggregates.mean_mse == twin.methods[1].aggregates.mean_mse);

  std::vector<Image> short_list(truths.begin(), truths.end() - 1);
  CHECK_THROWS_WITH_AS(compare_methods({{"bad", short_list}}, truths),
                       doctest::Contains("4"), std::invalid_argument);
}

TEST_CASE("report aggregates equal recomputation from the rows") {
  std::vector<Image> truths, recons;
  for (int i = 0; i < 9; ++i) {
    truths.push_back(random_image(6, 6, 70 + i, 0.1f, 1.f));
    recons.push_back(random_image(6, 6, 170 + i, 0.1f, 1.f));
  }
  const EvalReport report = compare_methods({{"m", recons}}, truths);
  const auto& rows = report.methods[0].per_image;
  const MethodAggregates again = aggregate_scores(rows);
  CHECK(std::fabs(report.methods[0].aggregates.mean_contrast - again.mean_contrast) < 1e-12);
  CHECK(std::fabs(report.methods[0].aggregates.median_mse - again.median_mse) < 1e-12);
  CHECK(std::fabs(report.methods[0].aggregates.std_mse - again.std_mse) < 1e-12);

  double mean_mse = 0.0;
  for (const auto& s : rows) mean_mse += s.mse;
  mean_mse /= rows.size();
  CHECK(std::fabs(report.methods[0].aggregates.mean_mse - mean_mse) < 1e-12);
}

TEST_CASE("report JSON and CSV files carry the per-image rows") {
  std::vector<Image> truths{random_image(4, 4, 1, 0.2f, 1.f)};
  const EvalReport report = compare_methods({{"cae", truths}}, truths);
  const auto jpath = (fs::temp_directory_path() / "report.json").string();
  const auto cpath = (fs::temp_directory_path() / "report.csv").string();
  write_report_json(jpath, report);
  write_report_csv(cpath, report);

  std::ifstream js(jpath);
  const std::string jtext((std::istreambuf_iterator<char>(js)),
                          std::istreambuf_iterator<char>());
  CHECK(jtext.find("\"methods\"") != std::string::npos);
  CHECK(jtext.find("\"per_image\"") != std::string::npos);
  CHECK(jtext.find("\"median_contrast\"") != std::string::npos);

  std::ifstream cs(cpath);
  std::string line;
  std::getline(cs, line);
  CHECK(line == "method,index,contrast,mse");
  fs::remove(jpath);
  fs::remove(cpath);
}

}  // TEST_SUITE
