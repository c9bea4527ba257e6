#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "photonlab/tensor.hpp"

namespace photonlab {

template <typename T>
struct PoolResultT {
  TensorT<T> output;
  // argmax position per output element, as a flat index into the input h*w plane
  std::vector<int32_t> indices;
};

/// 2x2 max pooling with stride 2 and ceil-mode shape (edge windows truncated,
/// so 7 -> 4). Ties break toward the lowest flat input index.
template <typename T>
PoolResultT<T> maxpool_2x2_ceil(const TensorT<T>& input) {
  if (input.rank() != 4)
    throw std::invalid_argument("maxpool_2x2_ceil: input must be rank 4, got " +
                                input.shape_string());
  const int bsz = input.extent(0), ch = input.extent(1), h = input.extent(2),
            w = input.extent(3);
  const int oh = (h + 1) / 2, ow = (w + 1) / 2;

  PoolResultT<T> res{TensorT<T>({bsz, ch, oh, ow}),
                     std::vector<int32_t>(static_cast<size_t>(bsz) * ch * oh * ow)};
  size_t out_i = 0;
  for (int b = 0; b < bsz; ++b) {
    for (int c = 0; c < ch; ++c) {
      const T* plane = input.data() + (static_cast<size_t>(b) * ch + c) * h * w;
      for (int y = 0; y < oh; ++y) {
        const int y1 = std::min(2 * y + 2, h);
        for (int x = 0; x < ow; ++x) {
          const int x1 = std::min(2 * x + 2, w);
          int best = 2 * y * w + 2 * x;
          T bv = plane[best];
          for (int iy = 2 * y; iy < y1; ++iy)
            for (int ix = 2 * x; ix < x1; ++ix) {
              const int fi = iy * w + ix;
              if (plane[fi] > bv) {
                bv = plane[fi];
                best = fi;
              }
            }
          res.output[out_i] = bv;
          res.indices[out_i] = best;
          ++out_i;
        }
      }
    }
  }
  return res;
}

/// Routes grad_out entries to the recorded argmax positions; everything else
/// stays zero. `indices` must come from the matching forward call.
template <typename T>
TensorT<T> maxpool_backward(const TensorT<T>& grad_out, const std::vector<int32_t>& indices,
                            const std::vector<int>& input_shape) {
  if (grad_out.rank() != 4 || input_shape.size() != 4)
    throw std::invalid_argument("maxpool_backward: tensors must be rank 4");
  if (indices.size() != grad_out.size())
    throw std::invalid_argument("maxpool_backward: index list size " +
                                std::to_string(indices.size()) +
                                " does not match grad_out " + grad_out.shape_string());
  const int bsz = input_shape[0], ch = input_shape[1], h = input_shape[2],
            w = input_shape[3];
  if (grad_out.extent(0) != bsz || grad_out.extent(1) != ch ||
      grad_out.extent(2) != (h + 1) / 2 || grad_out.extent(3) != (w + 1) / 2)
    throw std::invalid_argument("maxpool_backward: grad_out " + grad_out.shape_string() +
                                " is stale for input shape [" + std::to_string(bsz) + "," +
                                std::to_string(ch) + "," + std::to_string(h) + "," +
                                std::to_string(w) + "]");

  TensorT<T> grad_in(input_shape);
  const int oh = grad_out.extent(2), ow = grad_out.extent(3);
  size_t out_i = 0;
  for (int b = 0; b < bsz; ++b)
    for (int c = 0; c < ch; ++c) {
      T* plane = grad_in.data() + (static_cast<size_t>(b) * ch + c) * h * w;
      for (int i = 0; i < oh * ow; ++i, ++out_i) plane[indices[out_i]] += grad_out[out_i];
    }
  return grad_in;
}

}  // namespace photonlab
