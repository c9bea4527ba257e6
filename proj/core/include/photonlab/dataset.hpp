#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "photonlab/image.hpp"
#include "photonlab/photon_sim.hpp"

namespace photonlab {

/// Parsed IDX container (the MNIST/EMNIST format): big-endian header
/// [0, 0, type, ndims], ndims big-endian u32 extents, row-major payload.
struct IdxArray {
  uint8_t type_code = 0;  // 0x08 = unsigned byte
  std::vector<uint32_t> extents;
  std::vector<uint8_t> payload;  // raw bytes

  size_t element_count() const;
  /// For a [n, h, w] unsigned-byte array: image i normalized to [0,1] by /255.
  Image image_at(size_t i) const;
};

IdxArray parse_idx(const std::vector<uint8_t>& bytes);
IdxArray load_idx(const std::string& path);
std::vector<uint8_t> serialize_idx(const IdxArray& arr);
void write_idx(const std::string& path, const IdxArray& arr);

/// Deterministic shuffled split into disjoint train/test index lists of the
/// exact requested sizes.
struct Split {
  std::vector<int> train_indices;
  std::vector<int> test_indices;
};
Split make_split(size_t available, int train_count, int test_count, uint64_t seed);

struct PairProvenance {
  int index = 0;            // position within the split
  int source_index = 0;     // index into the source image set
  uint64_t stream_seed = 0;
  std::string frame_file;
  std::string truth_file;
};

/// Ordered (noisy frame, clean image) pairs plus the provenance needed to
/// regenerate every frame.
struct PairSet {
  std::string dataset_name;
  CameraModel camera;
  uint64_t master_seed = 0;
  std::vector<Frame> frames;
  std::vector<Image> truths;
  std::vector<PairProvenance> provenance;

  size_t size() const { return frames.size(); }
};

/// Simulates one frame per clean image (frame i seeded by (master_seed, i))
/// and caches the set under cache_dir as PGM files plus a JSON manifest.
PairSet build_pairs(const std::vector<Image>& clean_images, const CameraModel& cam,
                    uint64_t master_seed, const std::string& cache_dir,
                    const std::string& dataset_name);

/// Loads a cached pair set from its manifest.
PairSet load_pairs(const std::string& cache_dir);

}  // namespace photonlab
