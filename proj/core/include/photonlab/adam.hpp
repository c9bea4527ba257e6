#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "photonlab/tensor.hpp"

namespace photonlab {

/// Bias-corrected adaptive-moment optimizer state for one parameter tensor.
template <typename T>
struct AdamStateT {
  TensorT<T> m;  // first moment, zero-initialized
  TensorT<T> v;  // second moment, zero-initialized
  int64_t step = 0;
  T learning_rate = T(1e-3);
  T beta1 = T(0.9);
  T beta2 = T(0.999);
  T epsilon = T(1e-8);

  explicit AdamStateT(const std::vector<int>& shape, T lr = T(1e-3))
      : m(shape), v(shape), learning_rate(lr) {}
};

using AdamState = AdamStateT<float>;

/// One Adam update in place. Deterministic; rejects non-finite gradients.
template <typename T>
void adam_step(TensorT<T>& params, const TensorT<T>& grads, AdamStateT<T>& state,
               const std::string& param_name = "params") {
  require_same_shape(params, grads, "adam_step");
  require_same_shape(params, state.m, "adam_step(state)");
  for (size_t i = 0; i < grads.size(); ++i)
    if (!std::isfinite(grads[i]))
      throw std::runtime_error("adam_step: non-finite gradient for '" + param_name +
                               "' at element " + std::to_string(i));

  ++state.step;
  const T b1 = state.beta1, b2 = state.beta2;
  const T bc1 = T(1) - std::pow(b1, static_cast<T>(state.step));
  const T bc2 = T(1) - std::pow(b2, static_cast<T>(state.step));
  for (size_t i = 0; i < params.size(); ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const T mhat = state.m[i] / bc1;
    const T vhat = state.v[i] / bc2;
    params[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
  }
}

}  // namespace photonlab
