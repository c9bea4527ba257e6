#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace photonlab {

/// Dense row-major N-d array. Image-shaped tensors use [batch, channel,
/// height, width]. Float for training, double for gradient checking.
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  explicit TensorT(std::vector<int> shape, T fill = T(0))
      : shape_(std::move(shape)), data_(checked_volume(shape_), fill) {}

  TensorT(std::vector<int> shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != checked_volume(shape_))
      throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                  " does not match shape " + shape_string());
  }

  static TensorT zeros_like(const TensorT& other) { return TensorT(other.shape_); }

  int rank() const { return static_cast<int>(shape_.size()); }
  const std::vector<int>& shape() const { return shape_; }
  int extent(int axis) const { return shape_.at(static_cast<size_t>(axis)); }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& values() { return data_; }
  const std::vector<T>& values() const { return data_; }

  T& operator[](size_t i) { return data_[i]; }
  const T& operator[](size_t i) const { return data_[i]; }

  /// Rank-4 access (b, c, y, x).
  T& at4(int b, int c, int y, int x) { return data_[flat4(b, c, y, x)]; }
  const T& at4(int b, int c, int y, int x) const { return data_[flat4(b, c, y, x)]; }

  size_t flat4(int b, int c, int y, int x) const {
    return ((static_cast<size_t>(b) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }

  bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_string() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "," : "") << shape_[i];
    os << ']';
    return os.str();
  }

  template <typename U>
  TensorT<U> cast() const {
    std::vector<U> out(data_.size());
    for (size_t i = 0; i < data_.size(); ++i) out[i] = static_cast<U>(data_[i]);
    return TensorT<U>(shape_, std::move(out));
  }

 private:
  static size_t checked_volume(const std::vector<int>& shape) {
    size_t n = 1;
    for (int e : shape) {
      if (e <= 0) throw std::invalid_argument("tensor extent must be positive");
      n *= static_cast<size_t>(e);
    }
    return shape.empty() ? 0 : n;
  }

  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
void require_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* what) {
  if (!a.same_shape(b))
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape_string() +
                                " vs " + b.shape_string());
}

}  // namespace photonlab
