#pragma once

// .dmimg: "DMIMG1" | channels u32 | height u32 | width u32 | f32 payload (CHW),
// little-endian.

#include <filesystem>

#include "dmae/image.hpp"

namespace dmae::constellation {

void write_dmimg(const std::filesystem::path& path, const Image& image);
Image read_dmimg(const std::filesystem::path& path);

// 8-bit binary PPM (P6) for eyeballing; channels beyond 3 are dropped,
// single-channel images are replicated.
void export_ppm(const std::filesystem::path& path, const Image& image);

}  // namespace dmae::constellation
