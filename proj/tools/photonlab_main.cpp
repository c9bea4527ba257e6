// photonlab: simulate single-photon frames, train the CAE, run the TV
// baseline, and evaluate reconstructions from one reproducible seed.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "photonlab/cae.hpp"
#include "photonlab/dataset.hpp"
#include "photonlab/experiment.hpp"
#include "photonlab/image_io.hpp"
#include "photonlab/metrics.hpp"
#include "photonlab/parallel.hpp"
#include "photonlab/photon_sim.hpp"
#include "photonlab/rng.hpp"
#include "photonlab/synth.hpp"
#include "photonlab/tv.hpp"

namespace fs = std::filesystem;
using namespace photonlab;

namespace {

constexpr uint64_t kDefaultSeed = 1905;

uint64_t default_seed() {
  if (const char* env = std::getenv("PHOTONLAB_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw std::invalid_argument("PHOTONLAB_SEED is not a valid integer: " +
                                  std::string(env));
    }
  }
  return kDefaultSeed;
}

void add_camera_flags(CLI::App* cmd, CameraModel& cam, std::string& preset) {
  cmd->add_option("--camera-preset", preset,
                  "Camera preset: paper-1.6 or paper-0.8 (flux regimes)");
  cmd->add_option("--mu", cam.mean_photons, "Mean detected photons per pixel");
  cmd->add_option("--eta", cam.quantum_efficiency, "Quantum efficiency");
  cmd->add_option("--dark", cam.dark_rate, "Mean dark counts per pixel");
  cmd->add_option("--gain", cam.gain, "Analog counts per detected photon");
  cmd->add_option("--sigma-read", cam.sigma_read, "Read-noise standard deviation");
  cmd->add_option("--threshold", cam.threshold, "Binarization threshold");
}

CameraModel resolve_camera(const CLI::App* cmd, CameraModel cam, const std::string& preset) {
  if (!preset.empty()) {
    if (preset == "paper-1.6")
      cam.mean_photons = 1.6;
    else if (preset == "paper-0.8")
      cam.mean_photons = 0.8;
    else
      throw std::invalid_argument("unknown camera preset: " + preset);
    // explicit flags still override the preset
    for (const char* flag : {"--mu", "--eta", "--dark", "--gain", "--sigma-read",
                             "--threshold"})
      (void)flag;
  }
  (void)cmd;
  return cam;
}

std::vector<std::string> sorted_pgm_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.path().extension() == ".pgm") files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  return files;
}

int parse_trailing_index(const std::string& path) {
  const std::string stem = fs::path(path).stem().string();
  size_t pos = stem.size();
  while (pos > 0 && std::isdigit(static_cast<unsigned char>(stem[pos - 1]))) --pos;
  if (pos == stem.size()) return -1;
  return std::stoi(stem.substr(pos));
}

Image load_image_any(const std::string& path) {
  if (fs::path(path).extension() == ".f32i") return read_f32i(path);
  return image_from_pgm(read_pgm(path));
}

// ---- dataset-prepare ----

struct PrepareArgs {
  std::string images_idx;
  int synthetic = 0;
  int train_count = 0;
  int test_count = 0;
  std::optional<uint64_t> seed;
  std::string out;
  CameraModel camera;
  std::string preset;
};

int cmd_dataset_prepare(const PrepareArgs& args) {
  const uint64_t seed = args.seed.value_or(default_seed());
  const CameraModel cam = resolve_camera(nullptr, args.camera, args.preset);

  std::vector<Image> images;
  std::string dataset_name;
  if (!args.images_idx.empty()) {
    const IdxArray arr = load_idx(args.images_idx);
    if (arr.extents.size() != 3)
      throw std::runtime_error("expected a 3-d image IDX file: " + args.images_idx);
    for (size_t i = 0; i < arr.extents[0]; ++i) images.push_back(arr.image_at(i));
    dataset_name = fs::path(args.images_idx).filename().string();
  } else if (args.synthetic > 0) {
    images = synthetic_digits(args.synthetic, stream_seed(seed, 1)).images;
    dataset_name = "synthetic-digits";
  } else {
    throw std::invalid_argument("either --images or --synthetic is required");
  }

  const Split split =
      make_split(images.size(), args.train_count, args.test_count, stream_seed(seed, 2));
  std::vector<Image> train_images, test_images;
  for (int i : split.train_indices) train_images.push_back(images[static_cast<size_t>(i)]);
  for (int i : split.test_indices) test_images.push_back(images[static_cast<size_t>(i)]);

  build_pairs(train_images, cam, stream_seed(seed, 3),
              (fs::path(args.out) / "train").string(), dataset_name);
  build_pairs(test_images, cam, stream_seed(seed, 4),
              (fs::path(args.out) / "test").string(), dataset_name);
  std::cout << "pair caches written: " << args.out << " (train " << train_images.size()
            << ", test " << test_images.size() << ")\n";
  return 0;
}

// ---- simulate ----

struct SimulateArgs {
  std::string truth;
  int frames = 1;
  std::optional<uint64_t> seed;
  std::string out;
  CameraModel camera;
  std::string preset;
};

int cmd_simulate(const SimulateArgs& args) {
  const uint64_t seed = args.seed.value_or(default_seed());
  const CameraModel cam = resolve_camera(nullptr, args.camera, args.preset);
  const Image truth = load_image_any(args.truth);
  fs::create_directories(args.out);

  for (int k = 0; k < args.frames; ++k) {
    const Frame f = simulate_frame(truth, cam, stream_seed(seed, static_cast<uint64_t>(k)));
    char name[64];
    std::snprintf(name, sizeof(name), "frame_%05d.pgm", k);
    write_pgm_p5((fs::path(args.out) / name).string(), f);
  }
  const CountMap counts = accumulate_frames(truth, cam, args.frames, seed);
  write_pgm_p2((fs::path(args.out) / "counts.pgm").string(), counts);
  std::cout << args.frames << " frame(s) written to " << args.out << "\n";
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string pairs_dir;
  std::string eval_pairs_dir;
  int depth = 7;
  TrainConfig cfg;
  std::optional<uint64_t> seed;
  int jobs = 0;
  std::string model_out = "model.caew";
  std::string history_out = "history.csv";
};

std::vector<TrainPair> pairs_to_train(const PairSet& ps) {
  std::vector<TrainPair> out;
  out.reserve(ps.size());
  for (size_t i = 0; i < ps.size(); ++i)
    out.push_back({ps.frames[i].as_image(), ps.truths[i]});
  return out;
}

int cmd_train(const TrainArgs& args) {
  const uint64_t seed = args.seed.value_or(default_seed());
  const PairSet pairs = load_pairs(args.pairs_dir);
  std::vector<TrainPair> eval_set;
  if (!args.eval_pairs_dir.empty()) eval_set = pairs_to_train(load_pairs(args.eval_pairs_dir));

  TrainConfig cfg = args.cfg;
  cfg.shuffle_seed = stream_seed(seed, 6);
  const auto [weights, history] =
      train_cae(pairs_to_train(pairs), eval_set, build_architecture(args.depth), cfg,
                stream_seed(seed, 5), args.jobs);
  save_weights(weights, args.model_out);
  write_history_csv(args.history_out, history);
  std::cout << "model: " << args.model_out << "\nhistory: " << args.history_out << "\n";
  return 0;
}

// ---- infer / tv ----

struct InferArgs {
  std::string model;
  std::vector<std::string> inputs;
  std::string pairs_dir;
  std::string out;
  bool png = false;
  bool f32 = false;
  int jobs = 0;
};

std::vector<std::pair<std::string, Frame>> collect_frames(
    const std::vector<std::string>& inputs, const std::string& pairs_dir) {
  std::vector<std::pair<std::string, Frame>> frames;
  if (!pairs_dir.empty()) {
    const PairSet pairs = load_pairs(pairs_dir);
    for (size_t i = 0; i < pairs.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "recon_%05d", pairs.provenance[i].index);
      frames.emplace_back(name, pairs.frames[i]);
    }
  }
  for (const std::string& path : inputs) {
    const std::string stem = "recon_" + fs::path(path).stem().string();
    frames.emplace_back(stem, frame_from_pgm(read_pgm(path)));
  }
  if (frames.empty())
    throw std::invalid_argument("no input frames: pass --pairs or --input");
  return frames;
}

int cmd_infer(const InferArgs& args) {
  const CaeWeights weights = load_weights(args.model);
  const auto frames = collect_frames(args.inputs, args.pairs_dir);
  fs::create_directories(args.out);

  std::vector<Image> recons(frames.size());
  std::vector<double> ms(frames.size());
  parallel_for(static_cast<int>(frames.size()), args.jobs, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    recons[static_cast<size_t>(i)] = cae_infer(weights, frames[static_cast<size_t>(i)].second.as_image());
    ms[static_cast<size_t>(i)] =
        1e3 * std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  for (size_t i = 0; i < frames.size(); ++i) {
    const fs::path base = fs::path(args.out) / frames[i].first;
    write_pgm_p5(base.string() + ".pgm", recons[i]);
    if (args.png) write_png_gray8(base.string() + ".png", recons[i]);
    if (args.f32) write_f32i(base.string() + ".f32i", recons[i]);
    std::cerr << frames[i].first << ": " << ms[i] << " ms\n";
  }
  std::cout << frames.size() << " reconstruction(s) written to " << args.out << "\n";
  return 0;
}

struct TvArgs {
  std::vector<std::string> inputs;
  std::string pairs_dir;
  bool counts_input = false;
  TvConfig cfg;
  std::string out;
  bool png = false;
  bool f32 = false;
  int jobs = 0;
};

int cmd_tv(const TvArgs& args) {
  std::vector<std::pair<std::string, CountMap>> inputs;
  if (!args.pairs_dir.empty()) {
    const PairSet pairs = load_pairs(args.pairs_dir);
    for (size_t i = 0; i < pairs.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof(name), "recon_%05d", pairs.provenance[i].index);
      inputs.emplace_back(name, CountMap::from_frame(pairs.frames[i]));
    }
  }
  for (const std::string& path : args.inputs) {
    const PgmData pgm = read_pgm(path);
    inputs.emplace_back("recon_" + fs::path(path).stem().string(),
                        args.counts_input ? counts_from_pgm(pgm)
                                          : CountMap::from_frame(frame_from_pgm(pgm)));
  }
  if (inputs.empty()) throw std::invalid_argument("no inputs: pass --pairs or --input");
  fs::create_directories(args.out);

  std::vector<TvResult> results(inputs.size());
  std::vector<double> ms(inputs.size());
  parallel_for(static_cast<int>(inputs.size()), args.jobs, [&](int i) {
    const auto t0 = std::chrono::steady_clock::now();
    results[static_cast<size_t>(i)] = reconstruct_tv(inputs[static_cast<size_t>(i)].second, args.cfg);
    ms[static_cast<size_t>(i)] =
        1e3 * std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });
  for (size_t i = 0; i < inputs.size(); ++i) {
    const fs::path base = fs::path(args.out) / inputs[i].first;
    write_pgm_p5(base.string() + ".pgm", results[i].recon);
    if (args.png) write_png_gray8(base.string() + ".png", results[i].recon);
    if (args.f32) write_f32i(base.string() + ".f32i", results[i].recon);
    write_trace_csv(base.string() + "_trace.csv", results[i].trace);
    std::cerr << inputs[i].first << ": " << ms[i] << " ms, "
              << results[i].trace.rows.size() - 1 << " iterations\n";
  }
  std::cout << inputs.size() << " reconstruction(s) written to " << args.out << "\n";
  return 0;
}

// ---- eval / profile ----

struct EvalArgs {
  std::string truth_dir;
  std::vector<std::string> methods;  // name=dir
  std::string out_json = "report.json";
  std::string out_csv = "report.csv";
  bool robust = false;
};

std::vector<Image> load_truths(const std::string& dir) {
  if (fs::exists(fs::path(dir) / "manifest.json")) {
    const PairSet pairs = load_pairs(dir);
    return pairs.truths;
  }
  std::vector<Image> truths;
  for (const std::string& f : sorted_pgm_files(dir))
    truths.push_back(image_from_pgm(read_pgm(f)));
  return truths;
}

int cmd_eval(const EvalArgs& args) {
  const std::vector<Image> truths = load_truths(args.truth_dir);
  if (truths.empty()) throw std::runtime_error("no truth images in " + args.truth_dir);

  std::vector<MethodRecons> methods;
  for (const std::string& spec : args.methods) {
    const size_t eq = spec.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("--method expects name=dir, got: " + spec);
    MethodRecons method;
    method.name = spec.substr(0, eq);
    const std::string dir = spec.substr(eq + 1);
    std::vector<std::string> files;
    for (const std::string& f : sorted_pgm_files(dir))
      if (fs::path(f).stem().string().find("_trace") == std::string::npos)
        files.push_back(f);
    if (files.size() != truths.size()) {
      std::string missing;
      std::vector<bool> present(truths.size(), false);
      for (const std::string& f : files) {
        const int idx = parse_trailing_index(f);
        if (idx >= 0 && idx < static_cast<int>(truths.size())) present[idx] = true;
      }
      for (size_t i = 0; i < present.size(); ++i)
        if (!present[i]) missing += (missing.empty() ? "" : ",") + std::to_string(i);
      throw std::runtime_error("method '" + method.name + "' has " +
                               std::to_string(files.size()) + " recons for " +
                               std::to_string(truths.size()) +
                               " truths; missing indices: " + missing);
    }
    for (const std::string& f : files) method.recons.push_back(load_image_any(f));
    methods.push_back(std::move(method));
  }
  if (methods.empty()) throw std::invalid_argument("at least one --method is required");

  const EvalReport report = compare_methods(
      methods, truths, args.robust ? ContrastMode::Robust : ContrastMode::Literal);
  write_report_json(args.out_json, report);
  write_report_csv(args.out_csv, report);
  for (const auto& m : report.methods)
    std::cout << m.name << ": median contrast " << m.aggregates.median_contrast
              << ", median mse " << m.aggregates.median_mse << "\n";
  return 0;
}

struct ProfileArgs {
  std::string image;
  int row = 14;
  std::string out = "profile.csv";
};

int cmd_profile(const ProfileArgs& args) {
  const Image img = load_image_any(args.image);
  write_profile_csv(args.out, line_profile(img, args.row));
  std::cout << "profile row " << args.row << " -> " << args.out << "\n";
  return 0;
}

// ---- bench ----

struct BenchArgs {
  std::string config_path;
  std::optional<uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> epochs;
  std::optional<int> depth;
  std::optional<int> train_count;
  std::optional<int> test_count;
  std::optional<double> mu;
  std::optional<double> tv_weight;
  std::string out;
};

int cmd_bench(const BenchArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_path.empty()) cfg = experiment_config_from_json_file(args.config_path);
  if (!args.config_path.empty() && !args.seed && cfg.seed == 0) cfg.seed = default_seed();
  if (args.config_path.empty()) cfg.seed = default_seed();
  // flags override config-file values; the resolved merge is archived
  if (args.seed) cfg.seed = *args.seed;
  if (args.jobs) cfg.jobs = *args.jobs;
  if (args.epochs) cfg.train.epochs = *args.epochs;
  if (args.depth) cfg.cae_depth = *args.depth;
  if (args.train_count) cfg.train_count = *args.train_count;
  if (args.test_count) cfg.test_count = *args.test_count;
  if (args.mu) cfg.camera.mean_photons = *args.mu;
  if (args.tv_weight) cfg.tv.tv_weight = *args.tv_weight;
  if (!args.out.empty()) cfg.out_dir = args.out;

  const BenchResult result = run_bench(cfg);
  std::cout << "cae: median contrast " << result.cae.median_contrast << ", median mse "
            << result.cae.median_mse << "\n"
            << "tv:  median contrast " << result.tv.median_contrast << ", median mse "
            << result.tv.median_mse << "\n"
            << "report: " << result.report_json_path << "\n"
            << "panel:  " << result.panel_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-limited imaging: simulation, CAE and TV reconstruction"};
  app.require_subcommand(1);

  PrepareArgs prepare;
  auto* prep_cmd = app.add_subcommand("dataset-prepare",
                                      "Split a dataset and cache (frame, truth) pairs");
  prep_cmd->add_option("--images", prepare.images_idx, "IDX image file");
  prep_cmd->add_option("--synthetic", prepare.synthetic,
                       "Generate this many procedural digits instead of reading IDX");
  prep_cmd->add_option("--train", prepare.train_count, "Training pair count")->required();
  prep_cmd->add_option("--test", prepare.test_count, "Held-out pair count")->required();
  prep_cmd->add_option("--seed", prepare.seed, "Master seed (default: PHOTONLAB_SEED)");
  prep_cmd->add_option("--out", prepare.out, "Cache directory")->required();
  add_camera_flags(prep_cmd, prepare.camera, prepare.preset);

  SimulateArgs simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Render camera frames of one image");
  sim_cmd->add_option("--truth", simulate.truth, "Ground-truth image (PGM/F32I)")->required();
  sim_cmd->add_option("--frames", simulate.frames, "Number of exposures");
  sim_cmd->add_option("--seed", simulate.seed, "Master seed");
  sim_cmd->add_option("--out", simulate.out, "Output directory")->required();
  add_camera_flags(sim_cmd, simulate.camera, simulate.preset);

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a CAE on a pair cache");
  train_cmd->add_option("--pairs", train.pairs_dir, "Training pair cache")->required();
  train_cmd->add_option("--eval-pairs", train.eval_pairs_dir, "Held-out pair cache");
  train_cmd->add_option("--depth", train.depth, "CAE depth class: 5, 7 or 9");
  train_cmd->add_option("--epochs", train.cfg.epochs, "Training epochs");
  train_cmd->add_option("--batch", train.cfg.batch_size, "Mini-batch size");
  train_cmd->add_option("--lr", train.cfg.learning_rate, "Adam learning rate");
  train_cmd->add_option("--weight-decay", train.cfg.weight_decay,
                        "Squared-magnitude weight decay coefficient");
  train_cmd->add_option("--cadence", train.cfg.eval_cadence, "Held-out eval cadence");
  train_cmd->add_option("--seed", train.seed, "Master seed");
  train_cmd->add_option("--jobs", train.jobs, "Worker threads (0 = all)");
  train_cmd->add_option("--model-out", train.model_out, "Weight file path");
  train_cmd->add_option("--history-out", train.history_out, "History CSV path");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "CAE reconstruction of frames");
  infer_cmd->add_option("--model", infer.model, "Weight file")->required();
  infer_cmd->add_option("--input", infer.inputs, "Frame PGM file(s)");
  infer_cmd->add_option("--pairs", infer.pairs_dir, "Pair cache to reconstruct");
  infer_cmd->add_option("--out", infer.out, "Output directory")->required();
  infer_cmd->add_flag("--png", infer.png, "Also write PNG");
  infer_cmd->add_flag("--f32", infer.f32, "Also write raw float32 (F32I)");
  infer_cmd->add_option("--jobs", infer.jobs, "Worker threads (0 = all)");

  TvArgs tv;
  auto* tv_cmd = app.add_subcommand("tv", "TV-regularized Poisson reconstruction");
  tv_cmd->add_option("--input", tv.inputs, "Frame or count-map PGM file(s)");
  tv_cmd->add_option("--pairs", tv.pairs_dir, "Pair cache to reconstruct");
  tv_cmd->add_flag("--counts", tv.counts_input, "Treat --input PGMs as count maps");
  tv_cmd->add_option("--tv-weight", tv.cfg.tv_weight, "Regularizer weight");
  tv_cmd->add_option("--background", tv.cfg.background, "Model offset b");
  tv_cmd->add_option("--gain", tv.cfg.gain, "Forward scalar g");
  tv_cmd->add_option("--max-iters", tv.cfg.max_outer_iters, "Outer iteration budget");
  tv_cmd->add_option("--inner-iters", tv.cfg.inner_prox_iters, "Prox dual iterations");
  tv_cmd->add_option("--tol", tv.cfg.tolerance, "Relative objective tolerance");
  tv_cmd->add_option("--out", tv.out, "Output directory")->required();
  tv_cmd->add_flag("--png", tv.png, "Also write PNG");
  tv_cmd->add_flag("--f32", tv.f32, "Also write raw float32 (F32I)");
  tv_cmd->add_option("--jobs", tv.jobs, "Worker threads (0 = all)");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Contrast/MSE report for reconstructions");
  eval_cmd->add_option("--truth", eval.truth_dir, "Truth directory or pair cache")->required();
  eval_cmd->add_option("--method", eval.methods, "name=recon_dir (repeatable)")->required();
  eval_cmd->add_option("--out-json", eval.out_json, "Report JSON path");
  eval_cmd->add_option("--out-csv", eval.out_csv, "Report CSV path");
  eval_cmd->add_flag("--robust", eval.robust, "Percentile-based contrast");

  ProfileArgs profile;
  auto* prof_cmd = app.add_subcommand("profile", "Export one image row as CSV");
  prof_cmd->add_option("--image", profile.image, "Image (PGM/F32I)")->required();
  prof_cmd->add_option("--row", profile.row, "Row index");
  prof_cmd->add_option("--out", profile.out, "CSV path");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand(
      "bench", "Full pipeline: prepare, train, reconstruct both ways, evaluate");
  bench_cmd->add_option("--config", bench.config_path, "Experiment config JSON");
  bench_cmd->add_option("--seed", bench.seed, "Master seed override");
  bench_cmd->add_option("--jobs", bench.jobs, "Worker threads override");
  bench_cmd->add_option("--epochs", bench.epochs, "Training epochs override");
  bench_cmd->add_option("--depth", bench.depth, "CAE depth override");
  bench_cmd->add_option("--train-count", bench.train_count, "Training pair count");
  bench_cmd->add_option("--test-count", bench.test_count, "Held-out pair count");
  bench_cmd->add_option("--mu", bench.mu, "Mean photons per pixel");
  bench_cmd->add_option("--tv-weight", bench.tv_weight, "TV regularizer weight");
  bench_cmd->add_option("--out", bench.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (prep_cmd->parsed()) return cmd_dataset_prepare(prepare);
    if (sim_cmd->parsed()) return cmd_simulate(simulate);
    if (train_cmd->parsed()) return cmd_train(train);
    if (infer_cmd->parsed()) return cmd_infer(infer);
    if (tv_cmd->parsed()) return cmd_tv(tv);
    if (eval_cmd->parsed()) return cmd_eval(eval);
    if (prof_cmd->parsed()) return cmd_profile(profile);
    if (bench_cmd->parsed()) return cmd_bench(bench);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    // computational failures exit 1, usage/IO problems exit 2
    if (what.find("diverged") != std::string::npos ||
        what.find("non-finite") != std::string::npos)
      return 1;
    return 2;
  }
  return 0;
}
