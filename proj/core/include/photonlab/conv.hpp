#pragma once

#include <algorithm>
#include <cstring>

#include "photonlab/parallel.hpp"
#include <stdexcept>
#include <string>

#include "photonlab/tensor.hpp"

namespace photonlab {

/// 3x3 convolution layer with same-padding. Kernels are [out_ch, in_ch, 3, 3].
template <typename T>
struct ConvLayerT {
  TensorT<T> kernels;
  TensorT<T> bias;

  ConvLayerT() = default;
  ConvLayerT(int in_ch, int out_ch)
      : kernels({out_ch, in_ch, 3, 3}), bias({out_ch}) {}
  ConvLayerT(TensorT<T> k, TensorT<T> b) : kernels(std::move(k)), bias(std::move(b)) {
    validate();
  }

  int in_channels() const { return kernels.extent(1); }
  int out_channels() const { return kernels.extent(0); }
  size_t parameter_count() const { return kernels.size() + bias.size(); }

  void validate() const {
    if (kernels.rank() != 4 || kernels.extent(2) != 3 || kernels.extent(3) != 3)
      throw std::invalid_argument("conv kernels must be [out,in,3,3], got " +
                                  kernels.shape_string());
    if (bias.rank() != 1 || bias.extent(0) != kernels.extent(0))
      throw std::invalid_argument("conv bias must be [out_ch], got " + bias.shape_string());
  }
};

using ConvLayer = ConvLayerT<float>;

template <typename T>
struct ConvGradsT {
  TensorT<T> input;
  TensorT<T> kernels;
  TensorT<T> bias;
};

namespace detail {

// Channel planes are stored with a one-pixel zero halo and the row stride
// rounded up so full rows vectorize without edge branches.
inline int padded_row_stride(int w) { return ((w + 2 + 7) / 8) * 8; }

template <typename T>
void zero_halo_pack(const T* src, T* dst, int channels, int h, int w, int wp) {
  const size_t plane = static_cast<size_t>(h + 2) * wp;
  std::memset(dst, 0, channels * plane * sizeof(T));
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < h; ++y)
      std::memcpy(dst + c * plane + static_cast<size_t>(y + 1) * wp + 1,
                  src + (static_cast<size_t>(c) * h + y) * w, w * sizeof(T));
}

template <typename T>
void halo_unpack(const T* src, T* dst, int channels, int h, int w, int wp) {
  const size_t plane = static_cast<size_t>(h + 2) * wp;
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < h; ++y)
      std::memcpy(dst + (static_cast<size_t>(c) * h + y) * w,
                  src + c * plane + static_cast<size_t>(y + 1) * wp + 1, w * sizeof(T));
}

// out[co0..co1) = bias[co] + sum_ci corr3x3(in[ci], K[co][ci]) on halo-packed
// planes. Output channels are independent, so ranges can run on separate
// threads with bit-identical results.
template <typename T>
void conv3x3_packed_range(const T* in, const T* kernels, const T* bias, T* out, int ci_n,
                          int co0, int co1, int h, int w, int wp) {
  const size_t plane = static_cast<size_t>(h + 2) * wp;
  for (int co = co0; co < co1; ++co) {
    T* o = out + co * plane;
    const T b = bias ? bias[co] : T(0);
    for (int y = 1; y <= h; ++y) {
      T* orow = o + static_cast<size_t>(y) * wp + 1;
      for (int x = 0; x < w; ++x) orow[x] = b;
    }
    for (int ci = 0; ci < ci_n; ++ci) {
      const T* xp = in + ci * plane;
      const T* k = kernels + (static_cast<size_t>(co) * ci_n + ci) * 9;
      for (int y = 1; y <= h; ++y) {
        T* orow = o + static_cast<size_t>(y) * wp + 1;
        for (int kh = 0; kh < 3; ++kh) {
          const T* xrow = xp + static_cast<size_t>(y + kh - 1) * wp;
          const T w0 = k[kh * 3 + 0], w1 = k[kh * 3 + 1], w2 = k[kh * 3 + 2];
          for (int x = 0; x < w; ++x)
            orow[x] += w0 * xrow[x] + w1 * xrow[x + 1] + w2 * xrow[x + 2];
        }
      }
    }
  }
}

// Splits the output-channel range over `jobs` threads. Each thread owns
// disjoint output planes, so the result is identical for every job count.
template <typename T>
void conv3x3_packed(const T* in, const T* kernels, const T* bias, T* out, int ci_n,
                    int co_n, int h, int w, int wp, int jobs) {
  if (jobs <= 1 || co_n < 2) {
    conv3x3_packed_range(in, kernels, bias, out, ci_n, 0, co_n, h, w, wp);
    return;
  }
  jobs = std::min(jobs, co_n);
  WorkerPool::instance().run(jobs, [=](int t) {
    const int co0 = co_n * t / jobs;
    const int co1 = co_n * (t + 1) / jobs;
    conv3x3_packed_range(in, kernels, bias, out, ci_n, co0, co1, h, w, wp);
  });
}

template <typename T>
std::vector<T>& conv_scratch(size_t n) {
  static thread_local std::vector<T> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}

}  // namespace detail

/// Cross-correlation with 3x3 kernels, zero padding of width 1; output
/// spatial size equals input spatial size and bias is added per channel.
/// jobs > 1 fans the output channels out over threads (bit-identical).
template <typename T>
TensorT<T> conv2d_same(const TensorT<T>& input, const ConvLayerT<T>& layer, int jobs = 1) {
  layer.validate();
  if (input.rank() != 4)
    throw std::invalid_argument("conv2d_same: input must be rank 4 [b,c,h,w], got " +
                                input.shape_string());
  if (input.extent(1) != layer.in_channels())
    throw std::invalid_argument(
        "conv2d_same: input channel dim is " + std::to_string(input.extent(1)) +
        ", layer expects " + std::to_string(layer.in_channels()));

  const int bsz = input.extent(0), ci = input.extent(1), h = input.extent(2),
            w = input.extent(3);
  const int co = layer.out_channels();
  const int wp = detail::padded_row_stride(w);
  const size_t plane = static_cast<size_t>(h + 2) * wp;

  TensorT<T> out({bsz, co, h, w});
  auto& scratch = detail::conv_scratch<T>((ci + co) * plane);
  T* inp = scratch.data();
  T* outp = scratch.data() + ci * plane;
  const size_t in_bstride = static_cast<size_t>(ci) * h * w;
  const size_t out_bstride = static_cast<size_t>(co) * h * w;
  for (int b = 0; b < bsz; ++b) {
    detail::zero_halo_pack(input.data() + b * in_bstride, inp, ci, h, w, wp);
    detail::conv3x3_packed(inp, layer.kernels.data(), layer.bias.data(), outp, ci, co, h,
                           w, wp, jobs);
    detail::halo_unpack(outp, out.data() + b * out_bstride, co, h, w, wp);
  }
  return out;
}

/// Exact gradients of conv2d_same. `input` must be the tensor the forward
/// pass ran on; grad_out must match the forward output shape.
template <typename T>
ConvGradsT<T> conv2d_backward(const TensorT<T>& grad_out, const TensorT<T>& input,
                              const ConvLayerT<T>& layer) {
  layer.validate();
  if (input.rank() != 4 || grad_out.rank() != 4)
    throw std::invalid_argument("conv2d_backward: tensors must be rank 4");
  if (input.extent(1) != layer.in_channels())
    throw std::invalid_argument("conv2d_backward: cached input channel dim is " +
                                std::to_string(input.extent(1)) + ", layer expects " +
                                std::to_string(layer.in_channels()));
  const int bsz = input.extent(0), ci = input.extent(1), h = input.extent(2),
            w = input.extent(3);
  const int co = layer.out_channels();
  if (grad_out.extent(0) != bsz || grad_out.extent(1) != co || grad_out.extent(2) != h ||
      grad_out.extent(3) != w)
    throw std::invalid_argument(
        "conv2d_backward: grad_out " + grad_out.shape_string() +
        " does not match forward output shape [" + std::to_string(bsz) + "," +
        std::to_string(co) + "," + std::to_string(h) + "," + std::to_string(w) + "]");

  const int wp = detail::padded_row_stride(w);
  const size_t plane = static_cast<size_t>(h + 2) * wp;

  ConvGradsT<T> grads{TensorT<T>({bsz, ci, h, w}), TensorT<T>({co, ci, 3, 3}),
                      TensorT<T>({co})};

  // kernel transposed and spatially flipped: KT[ci][co][kh][kw] = K[co][ci][2-kh][2-kw]
  TensorT<T> kt({ci, co, 3, 3});
  for (int o = 0; o < co; ++o)
    for (int i = 0; i < ci; ++i)
      for (int kh = 0; kh < 3; ++kh)
        for (int kw = 0; kw < 3; ++kw)
          kt[((static_cast<size_t>(i) * co + o) * 3 + kh) * 3 + kw] =
              layer.kernels[((static_cast<size_t>(o) * ci + i) * 3 + (2 - kh)) * 3 +
                            (2 - kw)];

  auto& scratch = detail::conv_scratch<T>((2 * co + 2 * ci) * plane);
  T* gpad = scratch.data();
  T* xpad = gpad + co * plane;
  T* gin = xpad + ci * plane;

  const size_t in_bstride = static_cast<size_t>(ci) * h * w;
  const size_t out_bstride = static_cast<size_t>(co) * h * w;
  for (int b = 0; b < bsz; ++b) {
    detail::zero_halo_pack(grad_out.data() + b * out_bstride, gpad, co, h, w, wp);
    detail::zero_halo_pack(input.data() + b * in_bstride, xpad, ci, h, w, wp);

    detail::conv3x3_packed(gpad, kt.data(), static_cast<const T*>(nullptr), gin, co, ci,
                           h, w, wp, 1);
    detail::halo_unpack(gin, grads.input.data() + b * in_bstride, ci, h, w, wp);

    for (int o = 0; o < co; ++o) {
      const T* gp = gpad + o * plane;
      T bacc = 0;
      for (int y = 1; y <= h; ++y) {
        const T* grow = gp + static_cast<size_t>(y) * wp + 1;
        for (int x = 0; x < w; ++x) bacc += grow[x];
      }
      grads.bias[o] += bacc;
      for (int i = 0; i < ci; ++i) {
        const T* xp = xpad + i * plane;
        T* gk = grads.kernels.data() + (static_cast<size_t>(o) * ci + i) * 9;
        for (int kh = 0; kh < 3; ++kh) {
          for (int kw = 0; kw < 3; ++kw) {
            T acc = 0;
            for (int y = 1; y <= h; ++y) {
              const T* grow = gp + static_cast<size_t>(y) * wp + 1;
              const T* xrow = xp + static_cast<size_t>(y + kh - 1) * wp + kw;
              for (int x = 0; x < w; ++x) acc += grow[x] * xrow[x];
            }
            gk[kh * 3 + kw] += acc;
          }
        }
      }
    }
  }
  return grads;
}

}  // namespace photonlab
