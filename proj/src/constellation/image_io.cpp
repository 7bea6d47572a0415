#include "dmae/constellation/image_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "dmae/errors.hpp"

namespace dmae::constellation {

namespace {

constexpr char kMagic[6] = {'D', 'M', 'I', 'M', 'G', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const std::string& buf, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void write_dmimg(const std::filesystem::path& path, const Image& image) {
  if (image.pixels.size() != image.channels * image.height * image.width) {
    throw DimensionError("write_dmimg: pixel count does not match dims");
  }
  std::string buf(kMagic, sizeof(kMagic));
  put_u32(buf, static_cast<std::uint32_t>(image.channels));
  put_u32(buf, static_cast<std::uint32_t>(image.height));
  put_u32(buf, static_cast<std::uint32_t>(image.width));
  buf.reserve(buf.size() + image.pixels.size() * 4);
  for (float v : image.pixels) put_u32(buf, std::bit_cast<std::uint32_t>(v));
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed: " + path.string());
}

Image read_dmimg(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  constexpr std::size_t header = sizeof(kMagic) + 12;
  if (buf.size() < header || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("not a .dmimg file: " + path.string());
  }
  Image img(get_u32(buf, 6), get_u32(buf, 10), get_u32(buf, 14));
  if (buf.size() != header + img.pixels.size() * 4) throw IoError("truncated .dmimg file: " + path.string());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = std::bit_cast<float>(get_u32(buf, header + 4 * i));
  return img;
}

void export_ppm(const std::filesystem::path& path, const Image& image) {
  if (image.channels == 0) throw DimensionError("export_ppm: image has no channels");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot write " + path.string());
  os << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      for (std::size_t c = 0; c < 3; ++c) {
        const float v = image.at(std::min(c, image.channels - 1), y, x);
        const auto byte = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
        os.put(static_cast<char>(byte));
      }
    }
  }
}

}  // namespace dmae::constellation
