#pragma once

#include "photonlab/tensor.hpp"

namespace photonlab {

template <typename T>
struct MseResultT {
  T value;
  TensorT<T> grad;  // d(value)/d(pred) = 2 (pred - target) / N
};

/// Mean squared error over all elements, with its gradient w.r.t. pred.
template <typename T>
MseResultT<T> mse_loss(const TensorT<T>& pred, const TensorT<T>& target) {
  require_same_shape(pred, target, "mse_loss");
  const T n = static_cast<T>(pred.size());
  MseResultT<T> res{T(0), TensorT<T>::zeros_like(pred)};
  for (size_t i = 0; i < pred.size(); ++i) {
    const T d = pred[i] - target[i];
    res.value += d * d;
    res.grad[i] = T(2) * d / n;
  }
  res.value /= n;
  return res;
}

}  // namespace photonlab
