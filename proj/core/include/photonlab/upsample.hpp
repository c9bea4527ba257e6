#pragma once

#include <stdexcept>
#include <string>

#include "photonlab/tensor.hpp"

namespace photonlab {

/// Nearest-neighbor 2x upsampling cropped at the trailing edge to the exact
/// target size. Valid targets are {2h-1, 2h} x {2w-1, 2w}, the preimages of
/// ceil-mode halving.
template <typename T>
TensorT<T> upsample_nearest_to(const TensorT<T>& input, int target_h, int target_w) {
  if (input.rank() != 4)
    throw std::invalid_argument("upsample_nearest_to: input must be rank 4, got " +
                                input.shape_string());
  const int bsz = input.extent(0), ch = input.extent(1), h = input.extent(2),
            w = input.extent(3);
  if (target_h != 2 * h && target_h != 2 * h - 1)
    throw std::invalid_argument("upsample_nearest_to: target height " +
                                std::to_string(target_h) + " not in {" +
                                std::to_string(2 * h - 1) + "," + std::to_string(2 * h) +
                                "} for input height " + std::to_string(h));
  if (target_w != 2 * w && target_w != 2 * w - 1)
    throw std::invalid_argument("upsample_nearest_to: target width " +
                                std::to_string(target_w) + " not in {" +
                                std::to_string(2 * w - 1) + "," + std::to_string(2 * w) +
                                "} for input width " + std::to_string(w));

  TensorT<T> out({bsz, ch, target_h, target_w});
  for (int b = 0; b < bsz; ++b)
    for (int c = 0; c < ch; ++c) {
      const T* src = input.data() + (static_cast<size_t>(b) * ch + c) * h * w;
      T* dst = out.data() + (static_cast<size_t>(b) * ch + c) * target_h * target_w;
      for (int y = 0; y < target_h; ++y) {
        const T* srow = src + (y / 2) * w;
        T* drow = dst + static_cast<size_t>(y) * target_w;
        for (int x = 0; x < target_w; ++x) drow[x] = srow[x / 2];
      }
    }
  return out;
}

/// Adjoint of upsample_nearest_to: each input cell accumulates the gradients
/// of every output cell it was replicated into.
template <typename T>
TensorT<T> upsample_backward(const TensorT<T>& grad_out, int input_h, int input_w) {
  if (grad_out.rank() != 4)
    throw std::invalid_argument("upsample_backward: grad_out must be rank 4");
  const int bsz = grad_out.extent(0), ch = grad_out.extent(1), th = grad_out.extent(2),
            tw = grad_out.extent(3);
  if (th != 2 * input_h && th != 2 * input_h - 1)
    throw std::invalid_argument("upsample_backward: grad_out height " +
                                std::to_string(th) + " is stale for input height " +
                                std::to_string(input_h));
  if (tw != 2 * input_w && tw != 2 * input_w - 1)
    throw std::invalid_argument("upsample_backward: grad_out width " + std::to_string(tw) +
                                " is stale for input width " + std::to_string(input_w));

  TensorT<T> grad_in({bsz, ch, input_h, input_w});
  for (int b = 0; b < bsz; ++b)
    for (int c = 0; c < ch; ++c) {
      const T* src = grad_out.data() + (static_cast<size_t>(b) * ch + c) * th * tw;
      T* dst = grad_in.data() + (static_cast<size_t>(b) * ch + c) * input_h * input_w;
      for (int y = 0; y < th; ++y) {
        const T* srow = src + static_cast<size_t>(y) * tw;
        T* drow = dst + (y / 2) * input_w;
        for (int x = 0; x < tw; ++x) drow[x / 2] += srow[x];
      }
    }
  return grad_in;
}

}  // namespace photonlab
