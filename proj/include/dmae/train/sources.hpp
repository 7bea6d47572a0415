#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "dmae/constellation/dataset.hpp"
#include "dmae/image.hpp"

namespace dmae::train {

struct PairSample {
  Image noisy;
  Image clean;
  std::size_t label = 0;
  double snr_db = 0.0;
};

// Random-access collection of noisy/clean pairs with scheme labels.
class PairSource {
 public:
  virtual ~PairSource() = default;
  virtual std::size_t size() const = 0;
  virtual PairSample get(std::size_t index) const = 0;
};

class MemoryPairSource final : public PairSource {
 public:
  MemoryPairSource() = default;
  explicit MemoryPairSource(std::vector<PairSample> samples) : samples_(std::move(samples)) {}

  std::size_t size() const override { return samples_.size(); }
  PairSample get(std::size_t index) const override { return samples_.at(index); }
  const PairSample& at(std::size_t index) const { return samples_.at(index); }
  void push_back(PairSample s) { samples_.push_back(std::move(s)); }

 private:
  std::vector<PairSample> samples_;
};

// Reads .dmimg files of one split on demand.
class DiskPairSource final : public PairSource {
 public:
  DiskPairSource(const std::filesystem::path& root, const std::string& split);

  std::size_t size() const override { return records_.size(); }
  PairSample get(std::size_t index) const override;
  const std::vector<constellation::SampleRecord>& records() const { return records_; }

 private:
  std::filesystem::path root_;
  std::vector<constellation::SampleRecord> records_;
};

// Renders a split in memory with the same sample plan gen_dataset uses.
MemoryPairSource render_split(const constellation::DatasetConfig& cfg, const std::string& split, std::size_t count);

}  // namespace dmae::train
