#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "photonlab/activations.hpp"
#include "photonlab/conv.hpp"
#include "photonlab/image.hpp"
#include "photonlab/loss.hpp"
#include "photonlab/pool.hpp"
#include "photonlab/tensor.hpp"
#include "photonlab/upsample.hpp"

namespace photonlab {

/// Convolutional auto-encoder layout. Every encoder conv is followed by a
/// ceil-mode 2x2 max pool; every decoder conv is preceded by a nearest
/// upsample back along the encoder's size chain; a final 3x3 conv to one
/// channel plus sigmoid closes the model. The depth class counts weighted
/// (convolutional) layers: encoder + decoder + final.
struct CaeArchitecture {
  int depth_class = 7;  // 5, 7, 9; 0 marks a custom test variant
  int input_height = 28;
  int input_width = 28;
  int input_channels = 1;
  std::vector<int> encoder_channels;
  std::vector<int> decoder_channels;

  int weighted_layer_count() const {
    return static_cast<int>(encoder_channels.size() + decoder_channels.size()) + 1;
  }

  /// Spatial sizes entering each encoder stage: input, then ceil-halved.
  std::vector<std::pair<int, int>> encoder_entry_sizes() const;
  /// Bottleneck spatial size after the last pool.
  std::pair<int, int> bottleneck_size() const;
  /// Upsample targets for each decoder stage (encoder entry sizes reversed).
  std::vector<std::pair<int, int>> decoder_targets() const;

  void validate() const;
};

/// The paper's depth variants on 28x28 inputs.
CaeArchitecture build_architecture(int depth_class);

/// Arbitrary variant for small-scale gradient tests.
CaeArchitecture make_custom_architecture(int input_h, int input_w,
                                         std::vector<int> encoder_channels,
                                         std::vector<int> decoder_channels);

template <typename T>
struct CaeWeightsT {
  CaeArchitecture arch;
  // encoder convs, then decoder convs, then the final conv
  std::vector<ConvLayerT<T>> layers;

  size_t parameter_count() const {
    size_t n = 0;
    for (const auto& l : layers) n += l.parameter_count();
    return n;
  }

  template <typename U>
  CaeWeightsT<U> cast() const {
    CaeWeightsT<U> out;
    out.arch = arch;
    out.layers.reserve(layers.size());
    for (const auto& l : layers)
      out.layers.push_back(
          ConvLayerT<U>(l.kernels.template cast<U>(), l.bias.template cast<U>()));
    return out;
  }
};

using CaeWeights = CaeWeightsT<float>;

/// He-style fan-in scaled normal kernels, zero biases; deterministic in seed.
CaeWeights init_weights(const CaeArchitecture& arch, uint64_t seed);

/// Full forward pass on a [batch, in_ch, h, w] tensor; output is
/// [batch, 1, h, w] bounded to (0,1) by the final sigmoid. jobs > 1 threads
/// the convolutions over output channels (bit-identical for any count).
template <typename T>
TensorT<T> cae_forward(const CaeWeightsT<T>& weights, const TensorT<T>& input,
                       int jobs = 1);

/// Single-frame inference convenience wrapper: validates spatial size.
Image cae_infer(const CaeWeights& weights, const Image& frame01, int jobs = 1);

template <typename T>
struct CaeBackpropT {
  T loss = T(0);
  TensorT<T> prediction;
  std::vector<TensorT<T>> kernel_grads;  // aligned with weights.layers
  std::vector<TensorT<T>> bias_grads;
};

/// MSE loss of forward(input) against target and exact gradients for every
/// kernel and bias.
template <typename T>
CaeBackpropT<T> cae_loss_and_gradients(const CaeWeightsT<T>& weights,
                                       const TensorT<T>& input, const TensorT<T>& target);

struct TrainConfig {
  int epochs = 1000;
  int batch_size = 64;
  double learning_rate = 1e-3;
  double weight_decay = 0.0;  // coefficient on the squared parameter magnitude
  uint64_t shuffle_seed = 0;
  int eval_cadence = 1;  // evaluate held-out MSE every this many epochs

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;  // NaN until the first cadence evaluation
  double seconds = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> records;
};

void write_history_csv(const std::string& path, const TrainingHistory& history);

struct TrainPair {
  Image input;   // noisy frame as {0,1} floats
  Image target;  // clean intensity in [0,1]
};

/// Minimize mean MSE plus weight decay with Adam over shuffled mini-batches.
/// Deterministic given (init_seed, cfg) and independent of the worker count:
/// per-sample gradients are reduced in sample order.
std::pair<CaeWeights, TrainingHistory> train_cae(const std::vector<TrainPair>& train_set,
                                                 const std::vector<TrainPair>& eval_set,
                                                 const CaeArchitecture& arch,
                                                 const TrainConfig& cfg,
                                                 uint64_t init_seed, int jobs = 1);

/// Weight file: magic "CAEW", u32 LE format version, u32 LE header length,
/// UTF-8 JSON architecture header, then all parameters as f32 LE in
/// declaration order (kernels then bias, encoder -> decoder -> final).
void save_weights(const CaeWeights& weights, const std::string& path);
CaeWeights load_weights(const std::string& path);

// ---- template implementations ----

template <typename T>
TensorT<T> cae_forward(const CaeWeightsT<T>& weights, const TensorT<T>& input, int jobs) {
  const CaeArchitecture& arch = weights.arch;
  arch.validate();
  if (input.rank() != 4 || input.extent(1) != arch.input_channels ||
      input.extent(2) != arch.input_height || input.extent(3) != arch.input_width)
    throw std::invalid_argument("cae_forward: input " + input.shape_string() +
                                " does not match architecture input [b," +
                                std::to_string(arch.input_channels) + "," +
                                std::to_string(arch.input_height) + "," +
                                std::to_string(arch.input_width) + "]");

  const size_t n_enc = arch.encoder_channels.size();
  TensorT<T> x = input;
  for (size_t s = 0; s < n_enc; ++s) {
    x = conv2d_same(x, weights.layers[s], jobs);
    relu_inplace(x);
    x = maxpool_2x2_ceil(x).output;
  }
  const auto targets = arch.decoder_targets();
  for (size_t s = 0; s < arch.decoder_channels.size(); ++s) {
    x = upsample_nearest_to(x, targets[s].first, targets[s].second);
    x = conv2d_same(x, weights.layers[n_enc + s], jobs);
    relu_inplace(x);
  }
  x = conv2d_same(x, weights.layers.back(), jobs);
  sigmoid_inplace(x);
  return x;
}

template <typename T>
CaeBackpropT<T> cae_loss_and_gradients(const CaeWeightsT<T>& weights,
                                       const TensorT<T>& input,
                                       const TensorT<T>& target) {
  const CaeArchitecture& arch = weights.arch;
  const size_t n_enc = arch.encoder_channels.size();
  const size_t n_dec = arch.decoder_channels.size();

  struct EncCache {
    TensorT<T> conv_in;
    TensorT<T> conv_out;  // pre-relu
    std::vector<int32_t> pool_indices;
    std::vector<int> pre_pool_shape;
  };
  struct DecCache {
    int pre_up_h = 0, pre_up_w = 0;
    TensorT<T> conv_in;   // post-upsample
    TensorT<T> conv_out;  // pre-relu
  };

  std::vector<EncCache> enc(n_enc);
  std::vector<DecCache> dec(n_dec);

  TensorT<T> x = input;
  for (size_t s = 0; s < n_enc; ++s) {
    enc[s].conv_in = x;
    enc[s].conv_out = conv2d_same(x, weights.layers[s]);
    TensorT<T> r = relu(enc[s].conv_out);
    enc[s].pre_pool_shape = r.shape();
    auto pooled = maxpool_2x2_ceil(r);
    enc[s].pool_indices = std::move(pooled.indices);
    x = std::move(pooled.output);
  }
  const auto targets = arch.decoder_targets();
  for (size_t s = 0; s < n_dec; ++s) {
    dec[s].pre_up_h = x.extent(2);
    dec[s].pre_up_w = x.extent(3);
    dec[s].conv_in = upsample_nearest_to(x, targets[s].first, targets[s].second);
    dec[s].conv_out = conv2d_same(dec[s].conv_in, weights.layers[n_enc + s]);
    x = relu(dec[s].conv_out);
  }
  TensorT<T> final_in = x;
  TensorT<T> pre_sigmoid = conv2d_same(final_in, weights.layers.back());
  TensorT<T> prediction = sigmoid(pre_sigmoid);

  auto mse = mse_loss(prediction, target);

  CaeBackpropT<T> out;
  out.loss = mse.value;
  out.kernel_grads.resize(weights.layers.size());
  out.bias_grads.resize(weights.layers.size());

  TensorT<T> g = sigmoid_backward(mse.grad, prediction);
  {
    auto cg = conv2d_backward(g, final_in, weights.layers.back());
    out.kernel_grads.back() = std::move(cg.kernels);
    out.bias_grads.back() = std::move(cg.bias);
    g = std::move(cg.input);
  }
  for (size_t s = n_dec; s-- > 0;) {
    g = relu_backward(g, dec[s].conv_out);
    auto cg = conv2d_backward(g, dec[s].conv_in, weights.layers[n_enc + s]);
    out.kernel_grads[n_enc + s] = std::move(cg.kernels);
    out.bias_grads[n_enc + s] = std::move(cg.bias);
    g = upsample_backward(cg.input, dec[s].pre_up_h, dec[s].pre_up_w);
  }
  for (size_t s = n_enc; s-- > 0;) {
    g = maxpool_backward(g, enc[s].pool_indices, enc[s].pre_pool_shape);
    g = relu_backward(g, enc[s].conv_out);
    auto cg = conv2d_backward(g, enc[s].conv_in, weights.layers[s]);
    out.kernel_grads[s] = std::move(cg.kernels);
    out.bias_grads[s] = std::move(cg.bias);
    g = std::move(cg.input);
  }
  out.prediction = std::move(prediction);
  return out;
}

}  // namespace photonlab
