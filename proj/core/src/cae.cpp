#include "photonlab/cae.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "photonlab/adam.hpp"
#include "photonlab/parallel.hpp"
#include "photonlab/rng.hpp"

namespace photonlab {

using json = nlohmann::json;

std::vector<std::pair<int, int>> CaeArchitecture::encoder_entry_sizes() const {
  std::vector<std::pair<int, int>> sizes;
  int h = input_height, w = input_width;
  for (size_t s = 0; s < encoder_channels.size(); ++s) {
    sizes.emplace_back(h, w);
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  return sizes;
}

std::pair<int, int> CaeArchitecture::bottleneck_size() const {
  int h = input_height, w = input_width;
  for (size_t s = 0; s < encoder_channels.size(); ++s) {
    h = (h + 1) / 2;
    w = (w + 1) / 2;
  }
  return {h, w};
}

std::vector<std::pair<int, int>> CaeArchitecture::decoder_targets() const {
  auto sizes = encoder_entry_sizes();
  std::reverse(sizes.begin(), sizes.end());
  return sizes;
}

void CaeArchitecture::validate() const {
  if (input_height <= 0 || input_width <= 0 || input_channels <= 0)
    throw std::invalid_argument("cae: input dims must be positive");
  if (encoder_channels.empty() || encoder_channels.size() != decoder_channels.size())
    throw std::invalid_argument("cae: encoder/decoder stage counts must match and be >= 1");
  for (int c : encoder_channels)
    if (c <= 0) throw std::invalid_argument("cae: encoder channels must be positive");
  for (int c : decoder_channels)
    if (c <= 0) throw std::invalid_argument("cae: decoder channels must be positive");
  const auto bn = bottleneck_size();
  if (bn.first < 1 || bn.second < 1)
    throw std::invalid_argument("cae: too many pooling stages for the input size");
}

CaeArchitecture build_architecture(int depth_class) {
  CaeArchitecture arch;
  arch.depth_class = depth_class;
  switch (depth_class) {
    case 5:
      arch.encoder_channels = {64, 32};
      arch.decoder_channels = {64, 64};
      break;
    case 7:
      arch.encoder_channels = {64, 64, 32};
      arch.decoder_channels = {64, 64, 64};
      break;
    case 9:
      arch.encoder_channels = {64, 64, 32, 32};
      arch.decoder_channels = {32, 64, 64, 64};
      break;
    default:
      throw std::invalid_argument("unsupported CAE depth class " +
                                  std::to_string(depth_class) + " (expected 5, 7 or 9)");
  }
  arch.validate();
  return arch;
}

CaeArchitecture make_custom_architecture(int input_h, int input_w,
                                         std::vector<int> encoder_channels,
                                         std::vector<int> decoder_channels) {
  CaeArchitecture arch;
  arch.depth_class = 0;
  arch.input_height = input_h;
  arch.input_width = input_w;
  arch.encoder_channels = std::move(encoder_channels);
  arch.decoder_channels = std::move(decoder_channels);
  arch.validate();
  return arch;
}

CaeWeights init_weights(const CaeArchitecture& arch, uint64_t seed) {
  arch.validate();
  CaeWeights weights;
  weights.arch = arch;
  Rng rng(seed);

  auto make_layer = [&](int in_ch, int out_ch) {
    ConvLayer layer(in_ch, out_ch);
    const float stddev = std::sqrt(2.0f / (static_cast<float>(in_ch) * 9.0f));
    for (auto& v : layer.kernels.values()) v = stddev * static_cast<float>(rng.normal());
    // biases stay zero
    return layer;
  };

  int in_ch = arch.input_channels;
  for (int out_ch : arch.encoder_channels) {
    weights.layers.push_back(make_layer(in_ch, out_ch));
    in_ch = out_ch;
  }
  for (int out_ch : arch.decoder_channels) {
    weights.layers.push_back(make_layer(in_ch, out_ch));
    in_ch = out_ch;
  }
  weights.layers.push_back(make_layer(in_ch, 1));
  return weights;
}

Image cae_infer(const CaeWeights& weights, const Image& frame01, int jobs) {
  if (frame01.height != weights.arch.input_height ||
      frame01.width != weights.arch.input_width)
    throw std::invalid_argument(
        "cae_infer: frame is " + std::to_string(frame01.height) + "x" +
        std::to_string(frame01.width) + ", model expects " +
        std::to_string(weights.arch.input_height) + "x" +
        std::to_string(weights.arch.input_width));
  const Tensor out = cae_forward(weights, frame01.as_tensor(), jobs);
  return Image::from_tensor_plane(out);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
  if (weight_decay < 0) throw std::invalid_argument("train: weight decay must be >= 0");
  if (eval_cadence < 1) throw std::invalid_argument("train: eval cadence must be >= 1");
}

void write_history_csv(const std::string& path, const TrainingHistory& history) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  os << "epoch,train_mse,test_mse,seconds\n";
  char buf[160];
  for (const EpochRecord& r : history.records) {
    std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.3f\n", r.epoch, r.train_mse,
                  r.test_mse, r.seconds);
    os << buf;
  }
}

namespace {

double eval_mean_mse(const CaeWeights& weights, const std::vector<TrainPair>& pairs,
                     int jobs) {
  if (pairs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> losses(pairs.size());
  parallel_for(static_cast<int>(pairs.size()), jobs, [&](int i) {
    const Tensor pred = cae_forward(weights, pairs[i].input.as_tensor());
    losses[i] = mse_loss(pred, pairs[i].target.as_tensor()).value;
  });
  double sum = 0.0;
  for (double l : losses) sum += l;  // fixed order
  return sum / static_cast<double>(pairs.size());
}

}  // namespace

std::pair<CaeWeights, TrainingHistory> train_cae(const std::vector<TrainPair>& train_set,
                                                 const std::vector<TrainPair>& eval_set,
                                                 const CaeArchitecture& arch,
                                                 const TrainConfig& cfg, uint64_t init_seed,
                                                 int jobs) {
  cfg.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");
  for (const TrainPair& p : train_set)
    if (p.input.height != arch.input_height || p.input.width != arch.input_width ||
        p.target.height != arch.input_height || p.target.width != arch.input_width)
      throw std::invalid_argument("train: pair size does not match architecture input");

  CaeWeights weights = init_weights(arch, init_seed);
  const size_t n_layers = weights.layers.size();

  std::vector<AdamState> kernel_states, bias_states;
  kernel_states.reserve(n_layers);
  bias_states.reserve(n_layers);
  const float lr = static_cast<float>(cfg.learning_rate);
  for (const auto& l : weights.layers) {
    kernel_states.emplace_back(l.kernels.shape(), lr);
    bias_states.emplace_back(l.bias.shape(), lr);
  }

  Rng shuffle_rng(cfg.shuffle_seed);
  std::vector<int> order(train_set.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  TrainingHistory history;
  double last_test_mse = std::numeric_limits<double>::quiet_NaN();
  const int n = static_cast<int>(train_set.size());
  const float wd = static_cast<float>(cfg.weight_decay);

  std::vector<CaeBackpropT<float>> sample_grads(
      static_cast<size_t>(std::min(cfg.batch_size, n)));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();

    // Fisher-Yates with the library RNG keeps shuffles platform-stable
    for (int i = n - 1; i > 0; --i) {
      const int j = static_cast<int>(shuffle_rng.uniform_below(static_cast<uint64_t>(i) + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss_sum = 0.0;
    for (int start = 0, batch_idx = 0; start < n; start += cfg.batch_size, ++batch_idx) {
      const int bsz = std::min(cfg.batch_size, n - start);

      parallel_for(bsz, jobs, [&](int j) {
        const TrainPair& p = train_set[static_cast<size_t>(order[start + j])];
        sample_grads[j] =
            cae_loss_and_gradients(weights, p.input.as_tensor(), p.target.as_tensor());
      });

      double batch_loss = 0.0;
      for (int j = 0; j < bsz; ++j) batch_loss += sample_grads[j].loss;  // sample order
      batch_loss /= bsz;
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + ", batch " +
                                 std::to_string(batch_idx));
      epoch_loss_sum += batch_loss * bsz;

      const float inv_b = 1.0f / static_cast<float>(bsz);
      for (size_t l = 0; l < n_layers; ++l) {
        Tensor gk = Tensor::zeros_like(weights.layers[l].kernels);
        Tensor gb = Tensor::zeros_like(weights.layers[l].bias);
        for (int j = 0; j < bsz; ++j) {  // fixed reduction order
          const auto& sg = sample_grads[j];
          for (size_t i = 0; i < gk.size(); ++i) gk[i] += sg.kernel_grads[l][i];
          for (size_t i = 0; i < gb.size(); ++i) gb[i] += sg.bias_grads[l][i];
        }
        for (size_t i = 0; i < gk.size(); ++i) {
          gk[i] *= inv_b;
          if (wd > 0) gk[i] += 2.0f * wd * weights.layers[l].kernels[i];
        }
        for (size_t i = 0; i < gb.size(); ++i) {
          gb[i] *= inv_b;
          if (wd > 0) gb[i] += 2.0f * wd * weights.layers[l].bias[i];
        }
        adam_step(weights.layers[l].kernels, gk, kernel_states[l],
                  "layer" + std::to_string(l) + ".kernels");
        adam_step(weights.layers[l].bias, gb, bias_states[l],
                  "layer" + std::to_string(l) + ".bias");
      }
    }

    if (epoch % cfg.eval_cadence == 0) last_test_mse = eval_mean_mse(weights, eval_set, jobs);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = epoch_loss_sum / n;
    rec.test_mse = last_test_mse;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    history.records.push_back(rec);
  }
  return {std::move(weights), std::move(history)};
}

namespace {

json arch_to_json(const CaeArchitecture& arch) {
  json j;
  j["depth"] = arch.depth_class;
  j["input"] = {arch.input_height, arch.input_width};
  j["in_channels"] = arch.input_channels;
  j["encoder"] = arch.encoder_channels;
  j["decoder"] = arch.decoder_channels;
  json layers = json::array();
  int in_ch = arch.input_channels;
  for (int c : arch.encoder_channels) {
    layers.push_back({c, in_ch, 3, 3});
    in_ch = c;
  }
  for (int c : arch.decoder_channels) {
    layers.push_back({c, in_ch, 3, 3});
    in_ch = c;
  }
  layers.push_back({1, in_ch, 3, 3});
  j["layers"] = layers;
  return j;
}

constexpr uint32_t kWeightFormatVersion = 1;

void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

void save_weights(const CaeWeights& weights, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "weight serialization assumes a little-endian host");
  weights.arch.validate();
  const std::string header = arch_to_json(weights.arch).dump();

  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  std::string prefix = "CAEW";
  put_u32le(prefix, kWeightFormatVersion);
  put_u32le(prefix, static_cast<uint32_t>(header.size()));
  os.write(prefix.data(), static_cast<std::streamsize>(prefix.size()));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const auto& layer : weights.layers) {
    os.write(reinterpret_cast<const char*>(layer.kernels.data()),
             static_cast<std::streamsize>(layer.kernels.size() * 4));
    os.write(reinterpret_cast<const char*>(layer.bias.data()),
             static_cast<std::streamsize>(layer.bias.size() * 4));
  }
}

CaeWeights load_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());

  if (bytes.size() < 12 || std::memcmp(bytes.data(), "CAEW", 4) != 0)
    throw std::runtime_error("weight file format error (bad magic): " + path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const uint32_t version = get_u32le(p + 4);
  if (version != kWeightFormatVersion)
    throw std::runtime_error("weight file version mismatch (got " +
                             std::to_string(version) + ", expected " +
                             std::to_string(kWeightFormatVersion) + "): " + path);
  const uint32_t header_len = get_u32le(p + 8);
  if (bytes.size() < 12 + static_cast<size_t>(header_len))
    throw std::runtime_error("weight file truncated in header: " + path);

  json j;
  try {
    j = json::parse(bytes.begin() + 12, bytes.begin() + 12 + header_len);
  } catch (const json::exception& e) {
    throw std::runtime_error("weight file header is not valid JSON: " + path + " (" +
                             e.what() + ")");
  }

  CaeArchitecture arch;
  try {
    arch.depth_class = j.at("depth").get<int>();
    arch.input_height = j.at("input").at(0).get<int>();
    arch.input_width = j.at("input").at(1).get<int>();
    arch.input_channels = j.at("in_channels").get<int>();
    arch.encoder_channels = j.at("encoder").get<std::vector<int>>();
    arch.decoder_channels = j.at("decoder").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw std::runtime_error("weight file header missing fields: " + path + " (" +
                             e.what() + ")");
  }
  arch.validate();

  // cross-check declared layer shapes against the architecture
  const json expected_layers = arch_to_json(arch)["layers"];
  if (j.at("layers") != expected_layers)
    throw std::runtime_error("weight file shape mismatch: declared layer shapes do not "
                             "match the architecture: " + path);

  CaeWeights weights;
  weights.arch = arch;
  size_t param_count = 0;
  int in_ch = arch.input_channels;
  auto add_layer_shape = [&](int out_ch) {
    weights.layers.emplace_back(in_ch, out_ch);
    param_count += weights.layers.back().parameter_count();
    in_ch = out_ch;
  };
  for (int c : arch.encoder_channels) add_layer_shape(c);
  for (int c : arch.decoder_channels) add_layer_shape(c);
  add_layer_shape(1);

  const size_t expected_size = 12 + header_len + 4 * param_count;
  if (bytes.size() != expected_size)
    throw std::runtime_error("weight file truncated payload: " + path + " (expected " +
                             std::to_string(expected_size) + " bytes, got " +
                             std::to_string(bytes.size()) + ")");

  const char* cursor = bytes.data() + 12 + header_len;
  for (auto& layer : weights.layers) {
    std::memcpy(layer.kernels.data(), cursor, layer.kernels.size() * 4);
    cursor += layer.kernels.size() * 4;
    std::memcpy(layer.bias.data(), cursor, layer.bias.size() * 4);
    cursor += layer.bias.size() * 4;
  }
  return weights;
}

}  // namespace photonlab
