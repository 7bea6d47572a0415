#pragma once

// Dataset directory:
//   <root>/pretrain/{noisy,clean}/NNNNNN.dmimg
//   <root>/train/{noisy,clean}/NNNNNN.dmimg
//   <root>/test/{noisy,clean}/NNNNNN.dmimg
//   <root>/pretrain_signal/{noisy,clean}/NNNNNN.dmimg   (optional signal-image pairs)
//   <root>/manifest.json
//
// Sample i of every split has class i % 10, so splits whose size is a
// multiple of ten are exactly balanced. Pretraining SNRs are drawn
// uniformly from [snr_min, snr_max]; downstream SNRs cycle through the
// integers snr_min..snr_max.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "dmae/constellation/render.hpp"

namespace dmae::constellation {

inline constexpr const char* kPretrainSplit = "pretrain";
inline constexpr const char* kTrainSplit = "train";
inline constexpr const char* kTestSplit = "test";
inline constexpr const char* kPretrainSignalSplit = "pretrain_signal";

struct DatasetConfig {
  std::filesystem::path root;
  std::size_t pretrain_count = 10'000;
  std::size_t train_count = 1'000;
  std::size_t test_count = 100;
  double snr_min = -10.0;
  double snr_max = 10.0;
  std::uint64_t master_seed = 0;
  bool signal_images = false;
  PairConfig pair;
};

struct SampleRecord {
  std::string id;
  std::string split;
  sigsynth::Scheme scheme = sigsynth::Scheme::ask4;
  std::size_t label = 0;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
  std::string noisy_path;  // relative to the dataset root
  std::string clean_path;
};

struct Manifest {
  std::filesystem::path root;
  std::size_t image_size = 0;
  std::map<std::string, std::vector<SampleRecord>> splits;

  const std::vector<SampleRecord>& split(const std::string& name) const;
};

// Deterministic sample plan for one split; performs no I/O.
std::vector<SampleRecord> plan_split(const DatasetConfig& cfg, const std::string& split, std::size_t count);

// Renders every split to disk and writes manifest.json last.
Manifest gen_dataset(const DatasetConfig& cfg);

Manifest load_manifest(const std::filesystem::path& root);

// Renders the pair for a record without touching disk.
ImagePair render_record(const SampleRecord& record, const PairConfig& cfg);

}  // namespace dmae::constellation
