#include "photonlab/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "photonlab/image_io.hpp"
#include "photonlab/rng.hpp"

namespace photonlab {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

size_t idx_element_size(uint8_t type_code) {
  switch (type_code) {
    case 0x08:  // unsigned byte
    case 0x09:  // signed byte
      return 1;
    case 0x0B:  // short
      return 2;
    case 0x0C:  // int
    case 0x0D:  // float
      return 4;
    case 0x0E:  // double
      return 8;
    default:
      throw std::runtime_error("idx: unsupported element type code 0x" + [&] {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "%02X", type_code);
        return std::string(buf);
      }());
  }
}

uint32_t read_u32be(const uint8_t* p) {
  return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
         (static_cast<uint32_t>(p[2]) << 8) | static_cast<uint32_t>(p[3]);
}

void write_u32be(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

}  // namespace

size_t IdxArray::element_count() const {
  size_t n = 1;
  for (uint32_t e : extents) n *= e;
  return extents.empty() ? 0 : n;
}

Image IdxArray::image_at(size_t i) const {
  if (type_code != 0x08 || extents.size() != 3)
    throw std::runtime_error("idx: not an unsigned-byte image array");
  if (i >= extents[0]) throw std::out_of_range("idx: image index out of range");
  const int h = static_cast<int>(extents[1]), w = static_cast<int>(extents[2]);
  Image img(h, w);
  const uint8_t* src = payload.data() + i * static_cast<size_t>(h) * w;
  for (size_t k = 0; k < img.size(); ++k) img.pix[k] = static_cast<float>(src[k]) / 255.f;
  return img;
}

IdxArray parse_idx(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4) throw std::runtime_error("idx: fewer than 4 header bytes");
  if (bytes[0] != 0 || bytes[1] != 0)
    throw std::runtime_error("idx: bad magic (first two bytes must be zero)");
  IdxArray arr;
  arr.type_code = bytes[2];
  const size_t elem_size = idx_element_size(arr.type_code);
  const uint8_t ndims = bytes[3];
  if (ndims == 0) throw std::runtime_error("idx: bad magic (zero dimensions)");
  const size_t header_size = 4 + 4 * static_cast<size_t>(ndims);
  if (bytes.size() < header_size) throw std::runtime_error("idx: truncated dimension list");
  size_t count = 1;
  for (uint8_t d = 0; d < ndims; ++d) {
    const uint32_t extent = read_u32be(bytes.data() + 4 + 4 * d);
    arr.extents.push_back(extent);
    count *= extent;
  }
  const size_t expected = header_size + count * elem_size;
  if (bytes.size() != expected)
    throw std::runtime_error("idx: truncated payload (expected " + std::to_string(expected) +
                             " bytes, got " + std::to_string(bytes.size()) + ")");
  arr.payload.assign(bytes.begin() + static_cast<long>(header_size), bytes.end());
  return arr;
}

IdxArray load_idx(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read file: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes);
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string(e.what()) + " [" + path + "]");
  }
}

std::vector<uint8_t> serialize_idx(const IdxArray& arr) {
  std::vector<uint8_t> out;
  out.push_back(0);
  out.push_back(0);
  out.push_back(arr.type_code);
  out.push_back(static_cast<uint8_t>(arr.extents.size()));
  for (uint32_t e : arr.extents) write_u32be(out, e);
  out.insert(out.end(), arr.payload.begin(), arr.payload.end());
  return out;
}

void write_idx(const std::string& path, const IdxArray& arr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write file: " + path);
  const auto bytes = serialize_idx(arr);
  os.write(reinterpret_cast<const char*>(bytes.data()),
           static_cast<std::streamsize>(bytes.size()));
}

Split make_split(size_t available, int train_count, int test_count, uint64_t seed) {
  if (train_count < 0 || test_count < 0)
    throw std::invalid_argument("make_split: counts must be nonnegative");
  const size_t wanted = static_cast<size_t>(train_count) + static_cast<size_t>(test_count);
  if (wanted > available)
    throw std::invalid_argument("make_split: requested " + std::to_string(wanted) +
                                " images but only " + std::to_string(available) +
                                " available");
  std::vector<int> order(available);
  for (size_t i = 0; i < available; ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  for (size_t i = available; i-- > 1;) {
    const size_t j = rng.uniform_below(i + 1);
    std::swap(order[i], order[j]);
  }
  Split split;
  split.train_indices.assign(order.begin(), order.begin() + train_count);
  split.test_indices.assign(order.begin() + train_count,
                            order.begin() + train_count + test_count);
  return split;
}

namespace {

std::string pair_file_name(const char* stem, int index) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%05d.pgm", stem, index);
  return buf;
}

}  // namespace

PairSet build_pairs(const std::vector<Image>& clean_images, const CameraModel& cam,
                    uint64_t master_seed, const std::string& cache_dir,
                    const std::string& dataset_name) {
  cam.validate();
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  if (!fs::is_directory(cache_dir))
    throw std::runtime_error("cannot create pair cache directory: " + cache_dir);
  {  // fail early on read-only locations
    std::ofstream probe(fs::path(cache_dir) / ".write_probe");
    if (!probe) throw std::runtime_error("pair cache directory is not writable: " + cache_dir);
  }
  fs::remove(fs::path(cache_dir) / ".write_probe", ec);

  PairSet pairs;
  pairs.dataset_name = dataset_name;
  pairs.camera = cam;
  pairs.master_seed = master_seed;

  json manifest;
  manifest["dataset"] = dataset_name;
  manifest["master_seed"] = master_seed;
  manifest["camera"] = {{"mean_photons", cam.mean_photons},
                        {"quantum_efficiency", cam.quantum_efficiency},
                        {"dark_rate", cam.dark_rate},
                        {"gain", cam.gain},
                        {"sigma_read", cam.sigma_read},
                        {"threshold", cam.threshold}};
  manifest["pairs"] = json::array();

  for (size_t i = 0; i < clean_images.size(); ++i) {
    PairProvenance prov;
    prov.index = static_cast<int>(i);
    prov.source_index = static_cast<int>(i);
    prov.stream_seed = stream_seed(master_seed, i);
    prov.frame_file = pair_file_name("frame", prov.index);
    prov.truth_file = pair_file_name("truth", prov.index);

    const Frame frame = simulate_frame(clean_images[i], cam, prov.stream_seed);
    write_pgm_p5((fs::path(cache_dir) / prov.frame_file).string(), frame);
    write_pgm_p5((fs::path(cache_dir) / prov.truth_file).string(), clean_images[i]);

    manifest["pairs"].push_back({{"index", prov.index},
                                 {"source_index", prov.source_index},
                                 {"stream_seed", prov.stream_seed},
                                 {"frame_file", prov.frame_file},
                                 {"truth_file", prov.truth_file}});

    pairs.frames.push_back(frame);
    pairs.truths.push_back(clean_images[i]);
    pairs.provenance.push_back(std::move(prov));
  }

  std::ofstream os(fs::path(cache_dir) / "manifest.json");
  if (!os) throw std::runtime_error("cannot write manifest in: " + cache_dir);
  os << manifest.dump(2) << "\n";
  return pairs;
}

PairSet load_pairs(const std::string& cache_dir) {
  std::ifstream is(fs::path(cache_dir) / "manifest.json");
  if (!is) throw std::runtime_error("cannot read manifest in: " + cache_dir);
  json manifest;
  try {
    is >> manifest;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad manifest JSON in " + cache_dir + ": " + e.what());
  }

  PairSet pairs;
  pairs.dataset_name = manifest.at("dataset").get<std::string>();
  pairs.master_seed = manifest.at("master_seed").get<uint64_t>();
  const json& jc = manifest.at("camera");
  pairs.camera.mean_photons = jc.at("mean_photons").get<double>();
  pairs.camera.quantum_efficiency = jc.at("quantum_efficiency").get<double>();
  pairs.camera.dark_rate = jc.at("dark_rate").get<double>();
  pairs.camera.gain = jc.at("gain").get<double>();
  pairs.camera.sigma_read = jc.at("sigma_read").get<double>();
  pairs.camera.threshold = jc.at("threshold").get<double>();

  for (const json& jp : manifest.at("pairs")) {
    PairProvenance prov;
    prov.index = jp.at("index").get<int>();
    prov.source_index = jp.at("source_index").get<int>();
    prov.stream_seed = jp.at("stream_seed").get<uint64_t>();
    prov.frame_file = jp.at("frame_file").get<std::string>();
    prov.truth_file = jp.at("truth_file").get<std::string>();

    pairs.frames.push_back(
        frame_from_pgm(read_pgm((fs::path(cache_dir) / prov.frame_file).string())));
    pairs.truths.push_back(
        image_from_pgm(read_pgm((fs::path(cache_dir) / prov.truth_file).string())));
    pairs.provenance.push_back(std::move(prov));
  }
  return pairs;
}

}  // namespace photonlab
