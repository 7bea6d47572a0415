#pragma once

// Checkpoint file:
//   "DMAE2CKP" | version u32 | tensor count u32 |
//   per tensor: name length u32 | UTF-8 name | rank u32 | dims u64 x rank | f32 payload
// All integers and floats little-endian. A sidecar "<path>.json" lists
// names and shapes.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "dmae/tensor/params.hpp"

namespace dmae::tensor {

inline constexpr char kCheckpointMagic[8] = {'D', 'M', 'A', 'E', '2', 'C', 'K', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<float> values;
};

// Writes atomically (temp file + rename) along with the sidecar manifest.
void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path);

std::vector<NamedArray> to_arrays(const ParamStore<float>& params, const std::string& prefix = "");

// Copies every array whose name matches a parameter. Returns the names in
// `params` that had no counterpart. Shape mismatches throw DimensionError.
std::vector<std::string> load_into(ParamStore<float>& params, const std::vector<NamedArray>& arrays,
                                   const std::string& prefix = "");

}  // namespace dmae::tensor
