#pragma once

#include <string>
#include <vector>

#include "photonlab/image.hpp"

namespace photonlab {

/// 8-bit quantization used for all image export: round half up, clamp to [0,255].
uint8_t quantize8(float v);

/// Binary PGM (P5, maxval 255). Float images are quantized from [0,1].
void write_pgm_p5(const std::string& path, const Image& img);
/// Frames export as 0/255.
void write_pgm_p5(const std::string& path, const Frame& frame);
/// Plain-text PGM (P2) for count maps; maxval is the largest count (min 1).
void write_pgm_p2(const std::string& path, const CountMap& counts);

struct PgmData {
  int width = 0;
  int height = 0;
  int maxval = 0;
  bool binary_format = false;  // true for P5
  std::vector<int> values;     // row-major
};

/// Reads P2 or P5, maxval <= 65535. Throws std::runtime_error on bad input.
PgmData read_pgm(const std::string& path);

/// Interpret PGM data as a binary frame: nonzero -> 1.
Frame frame_from_pgm(const PgmData& pgm);
/// Interpret PGM data as a count map (raw values).
CountMap counts_from_pgm(const PgmData& pgm);
/// Interpret PGM data as an intensity image scaled by maxval to [0,1].
Image image_from_pgm(const PgmData& pgm);

/// Raw float32 image: 16-byte header (magic "F32I", u32 LE version, u32 LE
/// height, u32 LE width) then height*width IEEE floats, little-endian.
void write_f32i(const std::string& path, const Image& img);
Image read_f32i(const std::string& path);

/// 8-bit grayscale PNG (zlib-compressed, filter 0).
void write_png_gray8(const std::string& path, const Image& img);

}  // namespace photonlab
