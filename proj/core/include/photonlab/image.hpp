#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "photonlab/tensor.hpp"

namespace photonlab {

/// 2-d grayscale intensity map, row-major floats.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<float> pix;

  Image() = default;
  Image(int h, int w, float fill = 0.f)
      : height(h), width(w), pix(static_cast<size_t>(h) * w, fill) {
    if (h <= 0 || w <= 0) throw std::invalid_argument("image dims must be positive");
  }

  float& at(int r, int c) { return pix[static_cast<size_t>(r) * width + c]; }
  float at(int r, int c) const { return pix[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return pix.size(); }

  Tensor as_tensor() const {  // [1,1,h,w]
    return Tensor({1, 1, height, width}, std::vector<float>(pix));
  }
  static Image from_tensor_plane(const Tensor& t, int b = 0, int c = 0) {
    Image img(t.extent(2), t.extent(3));
    const float* src = t.data() + (static_cast<size_t>(b) * t.extent(1) + c) *
                                      t.extent(2) * t.extent(3);
    img.pix.assign(src, src + img.size());
    return img;
  }
};

/// One gated camera exposure after threshold binarization; strictly {0,1}.
struct Frame {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> bits;

  Frame() = default;
  Frame(int h, int w) : height(h), width(w), bits(static_cast<size_t>(h) * w, 0) {}

  uint8_t& at(int r, int c) { return bits[static_cast<size_t>(r) * width + c]; }
  uint8_t at(int r, int c) const { return bits[static_cast<size_t>(r) * width + c]; }
  size_t size() const { return bits.size(); }

  size_t ones_count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
  }

  Image as_image() const {
    Image img(height, width);
    for (size_t i = 0; i < bits.size(); ++i) img.pix[i] = static_cast<float>(bits[i]);
    return img;
  }
};

/// Per-pixel photon counts accumulated over one or more frames.
struct CountMap {
  int height = 0;
  int width = 0;
  std::vector<int32_t> counts;

  CountMap() = default;
  CountMap(int h, int w) : height(h), width(w), counts(static_cast<size_t>(h) * w, 0) {}

  static CountMap from_frame(const Frame& f) {
    CountMap m(f.height, f.width);
    for (size_t i = 0; i < f.size(); ++i) m.counts[i] = f.bits[i];
    return m;
  }
  size_t size() const { return counts.size(); }
};

}  // namespace photonlab
