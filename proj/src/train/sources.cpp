#include "dmae/train/sources.hpp"

#include "dmae/constellation/image_io.hpp"

namespace dmae::train {

DiskPairSource::DiskPairSource(const std::filesystem::path& root, const std::string& split) : root_(root) {
  records_ = constellation::load_manifest(root).split(split);
}

PairSample DiskPairSource::get(std::size_t index) const {
  const auto& r = records_.at(index);
  return {constellation::read_dmimg(root_ / r.noisy_path), constellation::read_dmimg(root_ / r.clean_path), r.label,
          r.snr_db};
}

MemoryPairSource render_split(const constellation::DatasetConfig& cfg, const std::string& split, std::size_t count) {
  std::vector<PairSample> out;
  out.reserve(count);
  for (const auto& r : constellation::plan_split(cfg, split, count)) {
    auto pair = constellation::render_record(r, cfg.pair);
    out.push_back({std::move(pair.noisy.image), std::move(pair.clean.image), r.label, r.snr_db});
  }
  return MemoryPairSource(std::move(out));
}

}  // namespace dmae::train
