#include "photonlab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "photonlab/dataset.hpp"
#include "photonlab/image_io.hpp"
#include "photonlab/rng.hpp"

namespace photonlab {

namespace {

struct P {
  double x, y;
};

using Polyline = std::vector<P>;

Polyline arc(double cx, double cy, double rx, double ry, double a0_deg, double a1_deg,
             int segments = 28) {
  Polyline pts;
  for (int i = 0; i <= segments; ++i) {
    const double a = (a0_deg + (a1_deg - a0_deg) * i / segments) * M_PI / 180.0;
    pts.push_back({cx + rx * std::cos(a), cy + ry * std::sin(a)});
  }
  return pts;
}

Polyline seg(double x0, double y0, double x1, double y1) { return {{x0, y0}, {x1, y1}}; }

// Strokes in a unit box, y pointing down.
std::vector<Polyline> digit_strokes(int digit) {
  switch (digit) {
    case 0:
      return {arc(0.5, 0.5, 0.19, 0.31, 0, 360)};
    case 1:
      return {seg(0.52, 0.14, 0.52, 0.86), seg(0.38, 0.28, 0.52, 0.14)};
    case 2:
      return {arc(0.5, 0.33, 0.19, 0.18, 170, 372), seg(0.655, 0.42, 0.31, 0.84),
              seg(0.31, 0.84, 0.71, 0.84)};
    case 3:
      return {arc(0.47, 0.33, 0.17, 0.17, 155, 430), arc(0.47, 0.665, 0.19, 0.185, 290, 565)};
    case 4:
      return {seg(0.58, 0.14, 0.26, 0.6), seg(0.26, 0.6, 0.78, 0.6),
              seg(0.62, 0.32, 0.62, 0.86)};
    case 5:
      return {seg(0.67, 0.15, 0.36, 0.15), seg(0.36, 0.15, 0.34, 0.44),
              arc(0.47, 0.63, 0.2, 0.21, 245, 495)};
    case 6:
      return {arc(0.48, 0.63, 0.18, 0.2, 0, 360), arc(0.57, 0.44, 0.27, 0.35, 195, 280)};
    case 7:
      return {seg(0.29, 0.16, 0.72, 0.16), seg(0.72, 0.16, 0.44, 0.86)};
    case 8:
      return {arc(0.5, 0.32, 0.15, 0.16, 0, 360), arc(0.5, 0.66, 0.18, 0.19, 0, 360)};
    case 9:
      return {arc(0.52, 0.36, 0.18, 0.2, 0, 360), arc(0.43, 0.55, 0.27, 0.35, 15, 100)};
    default:
      throw std::invalid_argument("render_digit: digit must be 0..9, got " +
                                  std::to_string(digit));
  }
}

double dist_point_segment(const P& p, const P& a, const P& b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double wx = p.x - a.x, wy = p.y - a.y;
  const double vv = vx * vx + vy * vy;
  double t = vv > 0 ? (wx * vx + wy * vy) / vv : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double dx = p.x - (a.x + t * vx), dy = p.y - (a.y + t * vy);
  return std::sqrt(dx * dx + dy * dy);
}

double dist_to_strokes(const P& p, const std::vector<Polyline>& strokes) {
  double best = 1e9;
  for (const Polyline& line : strokes)
    for (size_t i = 0; i + 1 < line.size(); ++i)
      best = std::min(best, dist_point_segment(p, line[i], line[i + 1]));
  return best;
}

}  // namespace

Image render_digit(int digit, uint64_t seed) {
  const auto strokes = digit_strokes(digit);
  Rng rng(seed);
  const double scale = 0.85 + 0.2 * rng.uniform01();
  const double rot = (rng.uniform01() - 0.5) * 0.45;
  const double tx = (rng.uniform01() - 0.5) * 0.12;
  const double ty = (rng.uniform01() - 0.5) * 0.12;
  const double halfwidth = 0.040 + 0.028 * rng.uniform01();
  const double aa = 0.035;
  const double cr = std::cos(-rot), sr = std::sin(-rot);

  const int n = 28;
  Image img(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      const double px = (c + 0.5) / n - 0.5 - tx;
      const double py = (r + 0.5) / n - 0.5 - ty;
      const P q{(px * cr - py * sr) / scale + 0.5, (px * sr + py * cr) / scale + 0.5};
      const double d = dist_to_strokes(q, strokes);
      const double intensity = std::clamp((halfwidth - d) / aa + 1.0, 0.0, 1.0);
      // snap to the 8-bit grid so caches round-trip exactly
      img.at(r, c) = static_cast<float>(quantize8(static_cast<float>(intensity))) / 255.f;
    }
  return img;
}

SyntheticSet synthetic_digits(int count, uint64_t seed) {
  if (count < 0) throw std::invalid_argument("synthetic_digits: count must be >= 0");
  SyntheticSet set;
  set.images.reserve(static_cast<size_t>(count));
  set.labels.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int digit = i % 10;
    set.images.push_back(render_digit(digit, stream_seed(seed, static_cast<uint64_t>(i))));
    set.labels.push_back(static_cast<uint8_t>(digit));
  }
  return set;
}

void write_synthetic_idx(const std::string& images_path, const std::string& labels_path,
                         int count, uint64_t seed) {
  const SyntheticSet set = synthetic_digits(count, seed);

  IdxArray images;
  images.type_code = 0x08;
  images.extents = {static_cast<uint32_t>(count), 28, 28};
  images.payload.reserve(static_cast<size_t>(count) * 28 * 28);
  for (const Image& img : set.images)
    for (float v : img.pix) images.payload.push_back(quantize8(v));
  write_idx(images_path, images);

  IdxArray labels;
  labels.type_code = 0x08;
  labels.extents = {static_cast<uint32_t>(count)};
  labels.payload = set.labels;
  write_idx(labels_path, labels);
}

}  // namespace photonlab
