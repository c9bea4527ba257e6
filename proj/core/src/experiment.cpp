#include "photonlab/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "photonlab/dataset.hpp"
#include "photonlab/image_io.hpp"
#include "photonlab/parallel.hpp"
#include "photonlab/rng.hpp"
#include "photonlab/synth.hpp"

namespace photonlab {

namespace fs = std::filesystem;
using json = nlohmann::json;

void ExperimentConfig::validate() const {
  if (train_count < 1 || test_count < 1)
    throw std::invalid_argument("experiment: train/test counts must be >= 1");
  camera.validate();
  train.validate();
  tv.validate();
}

namespace {

json camera_to_json(const CameraModel& cam) {
  return {{"mean_photons", cam.mean_photons},
          {"quantum_efficiency", cam.quantum_efficiency},
          {"dark_rate", cam.dark_rate},
          {"gain", cam.gain},
          {"sigma_read", cam.sigma_read},
          {"threshold", cam.threshold}};
}

CameraModel camera_from_json(const json& j, CameraModel cam) {
  if (j.contains("mean_photons")) cam.mean_photons = j["mean_photons"].get<double>();
  if (j.contains("quantum_efficiency"))
    cam.quantum_efficiency = j["quantum_efficiency"].get<double>();
  if (j.contains("dark_rate")) cam.dark_rate = j["dark_rate"].get<double>();
  if (j.contains("gain")) cam.gain = j["gain"].get<double>();
  if (j.contains("sigma_read")) cam.sigma_read = j["sigma_read"].get<double>();
  if (j.contains("threshold")) cam.threshold = j["threshold"].get<double>();
  return cam;
}

}  // namespace

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["dataset"] = {{"images_idx", cfg.images_idx},
                  {"synthetic_count", cfg.synthetic_count},
                  {"train_count", cfg.train_count},
                  {"test_count", cfg.test_count}};
  j["camera"] = camera_to_json(cfg.camera);
  j["cae"] = {{"depth", cfg.cae_depth},
              {"epochs", cfg.train.epochs},
              {"batch_size", cfg.train.batch_size},
              {"learning_rate", cfg.train.learning_rate},
              {"weight_decay", cfg.train.weight_decay},
              {"eval_cadence", cfg.train.eval_cadence}};
  j["tv"] = {{"tv_weight", cfg.tv.tv_weight},
             {"background", cfg.tv.background},
             {"gain", cfg.tv.gain},
             {"max_outer_iters", cfg.tv.max_outer_iters},
             {"inner_prox_iters", cfg.tv.inner_prox_iters},
             {"tolerance", cfg.tv.tolerance}};
  j["seed"] = cfg.seed;
  j["jobs"] = cfg.jobs;
  j["out_dir"] = cfg.out_dir;
  return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("bad experiment config JSON: ") + e.what());
  }
  ExperimentConfig cfg;
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    if (d.contains("images_idx")) cfg.images_idx = d["images_idx"].get<std::string>();
    if (d.contains("synthetic_count")) cfg.synthetic_count = d["synthetic_count"].get<int>();
    if (d.contains("train_count")) cfg.train_count = d["train_count"].get<int>();
    if (d.contains("test_count")) cfg.test_count = d["test_count"].get<int>();
  }
  if (j.contains("camera")) cfg.camera = camera_from_json(j["camera"], cfg.camera);
  if (j.contains("cae")) {
    const json& c = j["cae"];
    if (c.contains("depth")) cfg.cae_depth = c["depth"].get<int>();
    if (c.contains("epochs")) cfg.train.epochs = c["epochs"].get<int>();
    if (c.contains("batch_size")) cfg.train.batch_size = c["batch_size"].get<int>();
    if (c.contains("learning_rate")) cfg.train.learning_rate = c["learning_rate"].get<double>();
    if (c.contains("weight_decay")) cfg.train.weight_decay = c["weight_decay"].get<double>();
    if (c.contains("eval_cadence")) cfg.train.eval_cadence = c["eval_cadence"].get<int>();
  }
  if (j.contains("tv")) {
    const json& t = j["tv"];
    if (t.contains("tv_weight")) cfg.tv.tv_weight = t["tv_weight"].get<double>();
    if (t.contains("background")) cfg.tv.background = t["background"].get<double>();
    if (t.contains("gain")) cfg.tv.gain = t["gain"].get<double>();
    if (t.contains("max_outer_iters")) cfg.tv.max_outer_iters = t["max_outer_iters"].get<int>();
    if (t.contains("inner_prox_iters"))
      cfg.tv.inner_prox_iters = t["inner_prox_iters"].get<int>();
    if (t.contains("tolerance")) cfg.tv.tolerance = t["tolerance"].get<double>();
  }
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  if (j.contains("jobs")) cfg.jobs = j["jobs"].get<int>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  return cfg;
}

ExperimentConfig experiment_config_from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read config file: " + path);
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return experiment_config_from_json_text(text);
}

Image make_panel(const std::vector<Image>& truths, const std::vector<Image>& frames,
                 const std::vector<Image>& tv_recons, const std::vector<Image>& cae_recons,
                 int rows) {
  rows = std::min<int>(rows, static_cast<int>(truths.size()));
  if (rows < 1) throw std::invalid_argument("make_panel: no images");
  const int h = truths[0].height, w = truths[0].width, gap = 2;
  const std::vector<const std::vector<Image>*> cols = {&truths, &frames, &tv_recons,
                                                       &cae_recons};
  Image panel(rows * h + (rows - 1) * gap,
              static_cast<int>(cols.size()) * w + (static_cast<int>(cols.size()) - 1) * gap,
              0.5f);
  for (int r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols.size(); ++c) {
      const Image& src = (*cols[c])[r];
      // normalize each tile to its own max so faint recons stay visible
      float vmax = 0.f;
      for (float v : src.pix) vmax = std::max(vmax, v);
      const float scale = vmax > 0 ? 1.f / vmax : 1.f;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          panel.at(r * (h + gap) + y, static_cast<int>(c) * (w + gap) + x) =
              src.at(y, x) * scale;
    }
  return panel;
}

BenchResult run_bench(const ExperimentConfig& cfg) {
  cfg.validate();
  fs::create_directories(cfg.out_dir);

  {  // archive the exact resolved configuration
    std::ofstream os(fs::path(cfg.out_dir) / "config.json");
    if (!os) throw std::runtime_error("cannot write into out_dir: " + cfg.out_dir);
    os << experiment_config_to_json(cfg);
  }

  // derived, documented seed streams
  const uint64_t synth_seed = stream_seed(cfg.seed, 1);
  const uint64_t split_seed = stream_seed(cfg.seed, 2);
  const uint64_t train_pairs_seed = stream_seed(cfg.seed, 3);
  const uint64_t test_pairs_seed = stream_seed(cfg.seed, 4);
  const uint64_t init_seed = stream_seed(cfg.seed, 5);
  const uint64_t shuffle_seed = stream_seed(cfg.seed, 6);

  std::vector<Image> images;
  std::string dataset_name;
  if (!cfg.images_idx.empty()) {
    const IdxArray arr = load_idx(cfg.images_idx);
    for (size_t i = 0; i < arr.extents[0]; ++i) images.push_back(arr.image_at(i));
    dataset_name = fs::path(cfg.images_idx).filename().string();
  } else {
    int count = cfg.synthetic_count;
    if (count < cfg.train_count + cfg.test_count) count = cfg.train_count + cfg.test_count;
    images = synthetic_digits(count, synth_seed).images;
    dataset_name = "synthetic-digits";
  }

  const Split split =
      make_split(images.size(), cfg.train_count, cfg.test_count, split_seed);
  std::vector<Image> train_images, test_images;
  for (int i : split.train_indices) train_images.push_back(images[static_cast<size_t>(i)]);
  for (int i : split.test_indices) test_images.push_back(images[static_cast<size_t>(i)]);

  const PairSet train_pairs =
      build_pairs(train_images, cfg.camera, train_pairs_seed,
                  (fs::path(cfg.out_dir) / "pairs" / "train").string(), dataset_name);
  const PairSet test_pairs =
      build_pairs(test_images, cfg.camera, test_pairs_seed,
                  (fs::path(cfg.out_dir) / "pairs" / "test").string(), dataset_name);

  auto to_train_pairs = [](const PairSet& ps) {
    std::vector<TrainPair> out;
    out.reserve(ps.size());
    for (size_t i = 0; i < ps.size(); ++i)
      out.push_back({ps.frames[i].as_image(), ps.truths[i]});
    return out;
  };
  const std::vector<TrainPair> train_set = to_train_pairs(train_pairs);
  const std::vector<TrainPair> test_set = to_train_pairs(test_pairs);

  const CaeArchitecture arch = build_architecture(cfg.cae_depth);
  TrainConfig train_cfg = cfg.train;
  train_cfg.shuffle_seed = shuffle_seed;

  BenchResult result;
  const auto t_train0 = std::chrono::steady_clock::now();
  auto [weights, history] = train_cae(train_set, test_set, arch, train_cfg, init_seed,
                                      cfg.jobs);
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_train0).count();

  result.model_path = (fs::path(cfg.out_dir) / "model.caew").string();
  save_weights(weights, result.model_path);
  write_history_csv((fs::path(cfg.out_dir) / "history.csv").string(), history);

  // CAE inference on held-out frames
  fs::create_directories(fs::path(cfg.out_dir) / "recon_cae");
  std::vector<Image> cae_recons(test_set.size());
  const auto t_cae0 = std::chrono::steady_clock::now();
  parallel_for(static_cast<int>(test_set.size()), cfg.jobs, [&](int i) {
    cae_recons[static_cast<size_t>(i)] = cae_infer(weights, test_set[static_cast<size_t>(i)].input);
  });
  result.cae_infer_seconds_per_image =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_cae0).count() /
      static_cast<double>(test_set.size());

  // single-frame TV baseline on the same frames
  fs::create_directories(fs::path(cfg.out_dir) / "recon_tv");
  fs::create_directories(fs::path(cfg.out_dir) / "tv_traces");
  std::vector<Image> tv_recons(test_set.size());
  const auto t_tv0 = std::chrono::steady_clock::now();
  parallel_for(static_cast<int>(test_set.size()), cfg.jobs, [&](int i) {
    const TvResult res = reconstruct_tv(CountMap::from_frame(test_pairs.frames[i]), cfg.tv);
    tv_recons[static_cast<size_t>(i)] = res.recon;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "trace_%05d.csv", i);
    write_trace_csv((fs::path(cfg.out_dir) / "tv_traces" / buf).string(), res.trace);
  });
  result.tv_solve_seconds_per_image =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_tv0).count() /
      static_cast<double>(test_set.size());

  for (size_t i = 0; i < test_set.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "recon_%05zu.pgm", i);
    write_pgm_p5((fs::path(cfg.out_dir) / "recon_cae" / buf).string(), cae_recons[i]);
    write_pgm_p5((fs::path(cfg.out_dir) / "recon_tv" / buf).string(), tv_recons[i]);
  }

  std::vector<Image> truths;
  for (const auto& p : test_set) truths.push_back(p.target);
  result.report = compare_methods({{"cae", cae_recons}, {"tv", tv_recons}}, truths);
  result.cae = result.report.methods[0].aggregates;
  result.tv = result.report.methods[1].aggregates;

  result.report_json_path = (fs::path(cfg.out_dir) / "report.json").string();
  write_report_json(result.report_json_path, result.report);
  write_report_csv((fs::path(cfg.out_dir) / "report.csv").string(), result.report);

  std::vector<Image> frame_images;
  for (size_t i = 0; i < std::min<size_t>(8, test_pairs.size()); ++i)
    frame_images.push_back(test_pairs.frames[i].as_image());
  const Image panel = make_panel(truths, frame_images, tv_recons, cae_recons,
                                 static_cast<int>(frame_images.size()));
  result.panel_path = (fs::path(cfg.out_dir) / "panel.pgm").string();
  write_pgm_p5(result.panel_path, panel);

  {  // deterministic summary: metrics and artifact inventory, no wall times
    json summary;
    summary["dataset"] = dataset_name;
    summary["train_count"] = cfg.train_count;
    summary["test_count"] = cfg.test_count;
    summary["cae"] = {{"median_contrast", result.cae.median_contrast},
                      {"median_mse", result.cae.median_mse},
                      {"mean_contrast", result.cae.mean_contrast},
                      {"mean_mse", result.cae.mean_mse}};
    summary["tv"] = {{"median_contrast", result.tv.median_contrast},
                     {"median_mse", result.tv.median_mse},
                     {"mean_contrast", result.tv.mean_contrast},
                     {"mean_mse", result.tv.mean_mse}};
    summary["artifacts"] = {{"model", "model.caew"},
                            {"history", "history.csv"},
                            {"report_json", "report.json"},
                            {"report_csv", "report.csv"},
                            {"panel", "panel.pgm"}};
    std::ofstream os(fs::path(cfg.out_dir) / "summary.json");
    os << summary.dump(2) << "\n";
  }
  {  // wall times kept out of the byte-compared artifacts
    std::ofstream os(fs::path(cfg.out_dir) / "timings.txt");
    os << "train_seconds " << result.train_seconds << "\n"
       << "cae_infer_seconds_per_image " << result.cae_infer_seconds_per_image << "\n"
       << "tv_solve_seconds_per_image " << result.tv_solve_seconds_per_image << "\n";
  }
  return result;
}

}  // namespace photonlab
