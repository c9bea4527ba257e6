#pragma once

#include <cmath>

#include "photonlab/tensor.hpp"

namespace photonlab {

template <typename T>
void relu_inplace(TensorT<T>& x) {
  for (auto& v : x.values()) v = v > T(0) ? v : T(0);
}

template <typename T>
TensorT<T> relu(const TensorT<T>& x) {
  TensorT<T> out = x;
  relu_inplace(out);
  return out;
}

/// Backward through relu given the forward input; the subgradient at 0 is 0.
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& grad_out, const TensorT<T>& x) {
  require_same_shape(grad_out, x, "relu_backward");
  TensorT<T> grad = grad_out;
  for (size_t i = 0; i < grad.size(); ++i)
    if (x[i] <= T(0)) grad[i] = T(0);
  return grad;
}

template <typename T>
inline T sigmoid_scalar(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
void sigmoid_inplace(TensorT<T>& x) {
  for (auto& v : x.values()) v = sigmoid_scalar(v);
}

template <typename T>
TensorT<T> sigmoid(const TensorT<T>& x) {
  TensorT<T> out = x;
  sigmoid_inplace(out);
  return out;
}

/// Backward through sigmoid given the stored forward output y = sigmoid(x).
template <typename T>
TensorT<T> sigmoid_backward(const TensorT<T>& grad_out, const TensorT<T>& y) {
  require_same_shape(grad_out, y, "sigmoid_backward");
  TensorT<T> grad = grad_out;
  for (size_t i = 0; i < grad.size(); ++i) grad[i] *= y[i] * (T(1) - y[i]);
  return grad;
}

}  // namespace photonlab
