#pragma once

#include <cstddef>
#include <vector>

#include "dmae/image.hpp"

namespace dmae::model {

// Splits a C x H x W image into N = HW/P^2 rows of P*P*C values. Row i is
// the patch at grid cell (i / (W/P), i % (W/P)); within a row the layout is
// channel-last: ((y * P) + x) * C + c.
std::vector<float> patchify(const Image& image, std::size_t patch_size);

Image unpatchify(const std::vector<float>& rows, std::size_t channels, std::size_t height, std::size_t width,
                 std::size_t patch_size);

}  // namespace dmae::model
