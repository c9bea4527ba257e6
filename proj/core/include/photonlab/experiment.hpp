#pragma once

#include <cstdint>
#include <string>

#include "photonlab/cae.hpp"
#include "photonlab/metrics.hpp"
#include "photonlab/photon_sim.hpp"
#include "photonlab/tv.hpp"

namespace photonlab {

/// One reproducible desk-scale experiment: dataset -> frames -> CAE training
/// -> CAE + TV reconstruction of held-out frames -> metric report.
struct ExperimentConfig {
  // dataset: IDX paths, or a procedural digit set when images_idx is empty
  std::string images_idx;
  int synthetic_count = 2200;
  int train_count = 2000;
  int test_count = 200;

  CameraModel camera;
  int cae_depth = 7;
  TrainConfig train;
  TvConfig tv;

  uint64_t seed = 1905;
  int jobs = 0;  // 0 = all hardware threads
  std::string out_dir = "bench_out";

  void validate() const;
};

ExperimentConfig experiment_config_from_json_file(const std::string& path);
ExperimentConfig experiment_config_from_json_text(const std::string& text);
std::string experiment_config_to_json(const ExperimentConfig& cfg);

struct BenchResult {
  EvalReport report;
  MethodAggregates cae;
  MethodAggregates tv;
  std::string model_path;
  std::string report_json_path;
  std::string panel_path;
  double train_seconds = 0.0;
  double cae_infer_seconds_per_image = 0.0;
  double tv_solve_seconds_per_image = 0.0;
};

/// Runs the full pipeline under cfg.out_dir and archives the resolved config.
BenchResult run_bench(const ExperimentConfig& cfg);

/// Side-by-side panel (truth | frame | tv | cae) of the first rows test
/// images, for qualitative inspection.
Image make_panel(const std::vector<Image>& truths, const std::vector<Image>& frames,
                 const std::vector<Image>& tv_recons, const std::vector<Image>& cae_recons,
                 int rows);

}  // namespace photonlab
