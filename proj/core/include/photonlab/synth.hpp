#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "photonlab/image.hpp"

namespace photonlab {

/// Procedurally rendered 28x28 handwritten-style digit (0-9) with seeded
/// affine jitter and antialiased strokes. Intensities are quantized to the
/// 8-bit grid so PGM/IDX round trips are lossless.
Image render_digit(int digit, uint64_t seed);

struct SyntheticSet {
  std::vector<Image> images;
  std::vector<uint8_t> labels;
};

/// count digits, label i is i mod 10, jitter stream i derived from seed.
SyntheticSet synthetic_digits(int count, uint64_t seed);

/// Writes a synthetic set as a standard IDX image/label file pair.
void write_synthetic_idx(const std::string& images_path, const std::string& labels_path,
                         int count, uint64_t seed);

}  // namespace photonlab
