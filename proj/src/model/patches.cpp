#include "dmae/model/patches.hpp"

#include <string>

#include "dmae/errors.hpp"

namespace dmae::model {

namespace {

void check_dims(std::size_t h, std::size_t w, std::size_t p) {
  if (p == 0 || h % p != 0 || w % p != 0) {
    throw ConfigError("image " + std::to_string(h) + "x" + std::to_string(w) + " not divisible by patch size " +
                      std::to_string(p));
  }
}

}  // namespace

std::vector<float> patchify(const Image& image, std::size_t patch_size) {
  const std::size_t p = patch_size;
  const std::size_t c = image.channels;
  check_dims(image.height, image.width, p);
  const std::size_t gw = image.width / p;
  const std::size_t n = (image.height / p) * gw;
  const std::size_t row = p * p * c;
  std::vector<float> out(n * row);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y0 = (i / gw) * p;
    const std::size_t x0 = (i % gw) * p;
    float* dst = out.data() + i * row;
    for (std::size_t y = 0; y < p; ++y)
      for (std::size_t x = 0; x < p; ++x)
        for (std::size_t ch = 0; ch < c; ++ch) dst[(y * p + x) * c + ch] = image.at(ch, y0 + y, x0 + x);
  }
  return out;
}

Image unpatchify(const std::vector<float>& rows, std::size_t channels, std::size_t height, std::size_t width,
                 std::size_t patch_size) {
  const std::size_t p = patch_size;
  check_dims(height, width, p);
  const std::size_t gw = width / p;
  const std::size_t n = (height / p) * gw;
  const std::size_t row = p * p * channels;
  if (rows.size() != n * row) {
    throw DimensionError("unpatchify: expected " + std::to_string(n * row) + " values, got " +
                         std::to_string(rows.size()));
  }
  Image img(channels, height, width);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y0 = (i / gw) * p;
    const std::size_t x0 = (i % gw) * p;
    const float* src = rows.data() + i * row;
    for (std::size_t y = 0; y < p; ++y)
      for (std::size_t x = 0; x < p; ++x)
        for (std::size_t ch = 0; ch < channels; ++ch) img.at(ch, y0 + y, x0 + x) = src[(y * p + x) * channels + ch];
  }
  return img;
}

}  // namespace dmae::model
