#include "dmae/tensor/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "json.hpp"

#include "dmae/errors.hpp"

namespace dmae::tensor {

namespace {

template <class U>
void put_le(std::string& buf, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) buf.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

template <class U>
U get_le(const std::string& buf, std::size_t& pos) {
  if (pos + sizeof(U) > buf.size()) throw IoError("checkpoint truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += sizeof(U);
  return value;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open " + tmp.string() + " for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw IoError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedArray>& arrays) {
  std::string buf(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_le<std::uint32_t>(buf, kCheckpointVersion);
  put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(arrays.size()));
  nlohmann::json manifest;
  manifest["format"] = "DMAE2CKP";
  manifest["version"] = kCheckpointVersion;
  manifest["tensors"] = nlohmann::json::array();
  for (const auto& a : arrays) {
    if (numel(a.shape) != a.values.size()) throw DimensionError("checkpoint array " + a.name + " has wrong size");
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(a.name.size()));
    buf += a.name;
    put_le<std::uint32_t>(buf, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) put_le<std::uint64_t>(buf, d);
    for (float v : a.values) put_le<std::uint32_t>(buf, std::bit_cast<std::uint32_t>(v));
    manifest["tensors"].push_back({{"name", a.name}, {"shape", a.shape}});
  }
  write_file_atomic(path, buf);
  auto sidecar = path;
  sidecar += ".json";
  write_file_atomic(sidecar, manifest.dump(2) + "\n");
}

std::vector<NamedArray> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint " + path.string());
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kCheckpointMagic) || std::memcmp(buf.data(), kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw IoError("not a checkpoint (bad magic): " + path.string());
  }
  std::size_t pos = sizeof(kCheckpointMagic);
  const auto version = get_le<std::uint32_t>(buf, pos);
  if (version != kCheckpointVersion) throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get_le<std::uint32_t>(buf, pos);
  std::vector<NamedArray> out;
  out.reserve(count);
  for (std::uint32_t t = 0; t < count; ++t) {
    NamedArray a;
    const auto name_len = get_le<std::uint32_t>(buf, pos);
    if (pos + name_len > buf.size()) throw IoError("checkpoint truncated");
    a.name = buf.substr(pos, name_len);
    pos += name_len;
    const auto rank = get_le<std::uint32_t>(buf, pos);
    for (std::uint32_t r = 0; r < rank; ++r) a.shape.push_back(static_cast<std::size_t>(get_le<std::uint64_t>(buf, pos)));
    a.values.resize(numel(a.shape));
    for (auto& v : a.values) v = std::bit_cast<float>(get_le<std::uint32_t>(buf, pos));
    out.push_back(std::move(a));
  }
  if (pos != buf.size()) throw IoError("trailing bytes in checkpoint " + path.string());
  return out;
}

std::vector<NamedArray> to_arrays(const ParamStore<float>& params, const std::string& prefix) {
  std::vector<NamedArray> out;
  out.reserve(params.size());
  for (const auto& e : params.entries()) {
    out.push_back({prefix + e.name, e.value.shape(), std::vector<float>(e.value.data().begin(), e.value.data().end())});
  }
  return out;
}

std::vector<std::string> load_into(ParamStore<float>& params, const std::vector<NamedArray>& arrays,
                                   const std::string& prefix) {
  std::unordered_map<std::string, const NamedArray*> by_name;
  for (const auto& a : arrays) by_name.emplace(a.name, &a);
  std::vector<std::string> missing;
  for (auto& e : params.entries()) {
    auto it = by_name.find(prefix + e.name);
    if (it == by_name.end()) {
      missing.push_back(e.name);
      continue;
    }
    if (it->second->shape != e.value.shape()) {
      throw DimensionError("checkpoint tensor " + e.name + " has shape " + shape_str(it->second->shape) +
                           ", model expects " + shape_str(e.value.shape()));
    }
    auto dst = e.value.mutable_data();
    std::copy(it->second->values.begin(), it->second->values.end(), dst.begin());
  }
  return missing;
}

}  // namespace dmae::tensor
