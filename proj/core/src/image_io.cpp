#include "photonlab/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace photonlab {

namespace {

void require_stream(const std::ofstream& os, const std::string& path) {
  if (!os) throw std::runtime_error("cannot write file: " + path);
}

std::vector<char> read_all(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read file: " + path);
  std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                          std::istreambuf_iterator<char>());
  return bytes;
}

void put_u32le(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

uint32_t get_u32le(const unsigned char* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

}  // namespace

uint8_t quantize8(float v) {
  const float scaled = std::floor(v * 255.f + 0.5f);
  return static_cast<uint8_t>(std::clamp(scaled, 0.f, 255.f));
}

void write_pgm_p5(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  require_stream(os, path);
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width));
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) row[c] = quantize8(img.at(r, c));
    os.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

void write_pgm_p5(const std::string& path, const Frame& frame) {
  std::ofstream os(path, std::ios::binary);
  require_stream(os, path);
  os << "P5\n" << frame.width << " " << frame.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(frame.width));
  for (int r = 0; r < frame.height; ++r) {
    for (int c = 0; c < frame.width; ++c) row[c] = frame.at(r, c) ? 255 : 0;
    os.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

void write_pgm_p2(const std::string& path, const CountMap& counts) {
  std::ofstream os(path);
  require_stream(os, path);
  int maxval = 1;
  for (int v : counts.counts) maxval = std::max(maxval, v);
  os << "P2\n" << counts.width << " " << counts.height << "\n" << maxval << "\n";
  for (int r = 0; r < counts.height; ++r) {
    for (int c = 0; c < counts.width; ++c)
      os << counts.counts[static_cast<size_t>(r) * counts.width + c]
         << (c + 1 == counts.width ? "" : " ");
    os << "\n";
  }
}

PgmData read_pgm(const std::string& path) {
  std::vector<char> bytes = read_all(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw std::runtime_error("not a PGM (P2/P5) file: " + path);
  PgmData pgm;
  pgm.binary_format = bytes[1] == '5';

  // header tokens may be separated by whitespace and '#' comments
  size_t pos = 2;
  auto next_token = [&]() -> long {
    for (;;) {
      while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos])))
        ++pos;
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        continue;
      }
      break;
    }
    if (pos >= bytes.size()) throw std::runtime_error("truncated PGM header: " + path);
    long v = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + (bytes[pos] - '0');
      ++pos;
      any = true;
    }
    if (!any) throw std::runtime_error("malformed PGM header: " + path);
    return v;
  };

  pgm.width = static_cast<int>(next_token());
  pgm.height = static_cast<int>(next_token());
  pgm.maxval = static_cast<int>(next_token());
  if (pgm.width <= 0 || pgm.height <= 0 || pgm.maxval <= 0 || pgm.maxval > 65535)
    throw std::runtime_error("bad PGM dimensions/maxval: " + path);

  const size_t n = static_cast<size_t>(pgm.width) * pgm.height;
  pgm.values.resize(n);
  if (pgm.binary_format) {
    ++pos;  // single whitespace byte after maxval
    const int bytes_per = pgm.maxval > 255 ? 2 : 1;
    if (bytes.size() - pos < n * bytes_per)
      throw std::runtime_error("truncated PGM payload: " + path);
    const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data()) + pos;
    for (size_t i = 0; i < n; ++i)
      pgm.values[i] = bytes_per == 1 ? p[i] : (p[2 * i] << 8) | p[2 * i + 1];
  } else {
    for (size_t i = 0; i < n; ++i) pgm.values[i] = static_cast<int>(next_token());
  }
  return pgm;
}

Frame frame_from_pgm(const PgmData& pgm) {
  Frame f(pgm.height, pgm.width);
  for (size_t i = 0; i < f.size(); ++i) f.bits[i] = pgm.values[i] > 0 ? 1 : 0;
  return f;
}

CountMap counts_from_pgm(const PgmData& pgm) {
  CountMap m(pgm.height, pgm.width);
  for (size_t i = 0; i < m.size(); ++i) m.counts[i] = pgm.values[i];
  return m;
}

Image image_from_pgm(const PgmData& pgm) {
  Image img(pgm.height, pgm.width);
  for (size_t i = 0; i < img.size(); ++i)
    img.pix[i] = static_cast<float>(pgm.values[i]) / static_cast<float>(pgm.maxval);
  return img;
}

void write_f32i(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  require_stream(os, path);
  std::string header = "F32I";
  put_u32le(header, 1u);
  put_u32le(header, static_cast<uint32_t>(img.height));
  put_u32le(header, static_cast<uint32_t>(img.width));
  os.write(header.data(), static_cast<std::streamsize>(header.size()));
  static_assert(sizeof(float) == 4);
  os.write(reinterpret_cast<const char*>(img.pix.data()),
           static_cast<std::streamsize>(img.pix.size() * 4));
}

Image read_f32i(const std::string& path) {
  std::vector<char> bytes = read_all(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "F32I", 4) != 0)
    throw std::runtime_error("not an F32I file: " + path);
  const unsigned char* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const uint32_t version = get_u32le(p + 4);
  if (version != 1) throw std::runtime_error("unsupported F32I version: " + path);
  const uint32_t h = get_u32le(p + 8), w = get_u32le(p + 12);
  const size_t n = static_cast<size_t>(h) * w;
  if (bytes.size() != 16 + n * 4)
    throw std::runtime_error("truncated F32I payload: " + path);
  Image img(static_cast<int>(h), static_cast<int>(w));
  std::memcpy(img.pix.data(), bytes.data() + 16, n * 4);
  return img;
}

namespace {

void png_chunk(std::ofstream& os, const char type[4], const std::string& payload) {
  const uint32_t len = static_cast<uint32_t>(payload.size());
  const unsigned char lenb[4] = {static_cast<unsigned char>(len >> 24),
                                 static_cast<unsigned char>(len >> 16),
                                 static_cast<unsigned char>(len >> 8),
                                 static_cast<unsigned char>(len)};
  os.write(reinterpret_cast<const char*>(lenb), 4);
  uLong crc = crc32(0L, reinterpret_cast<const Bytef*>(type), 4);
  crc = crc32(crc, reinterpret_cast<const Bytef*>(payload.data()),
              static_cast<uInt>(payload.size()));
  os.write(type, 4);
  os.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  const unsigned char crcb[4] = {static_cast<unsigned char>(crc >> 24),
                                 static_cast<unsigned char>(crc >> 16),
                                 static_cast<unsigned char>(crc >> 8),
                                 static_cast<unsigned char>(crc)};
  os.write(reinterpret_cast<const char*>(crcb), 4);
}

}  // namespace

void write_png_gray8(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary);
  require_stream(os, path);
  static const unsigned char sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  os.write(reinterpret_cast<const char*>(sig), 8);

  std::string ihdr;
  auto put_u32be = [&](uint32_t v) {
    ihdr.push_back(static_cast<char>(v >> 24));
    ihdr.push_back(static_cast<char>(v >> 16));
    ihdr.push_back(static_cast<char>(v >> 8));
    ihdr.push_back(static_cast<char>(v));
  };
  put_u32be(static_cast<uint32_t>(img.width));
  put_u32be(static_cast<uint32_t>(img.height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // filter method
  ihdr.push_back(0);  // no interlace
  png_chunk(os, "IHDR", ihdr);

  // scanlines: filter byte 0 then pixels
  std::vector<unsigned char> raw(static_cast<size_t>(img.height) * (img.width + 1));
  for (int r = 0; r < img.height; ++r) {
    unsigned char* row = raw.data() + static_cast<size_t>(r) * (img.width + 1);
    row[0] = 0;
    for (int c = 0; c < img.width; ++c) row[c + 1] = quantize8(img.at(r, c));
  }
  uLongf comp_len = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> comp(comp_len);
  if (compress2(comp.data(), &comp_len, raw.data(), static_cast<uLong>(raw.size()), 9) !=
      Z_OK)
    throw std::runtime_error("png deflate failed: " + path);
  png_chunk(os, "IDAT",
            std::string(reinterpret_cast<const char*>(comp.data()), comp_len));
  png_chunk(os, "IEND", "");
}

}  // namespace photonlab
