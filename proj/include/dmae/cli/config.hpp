#pragma once

// Flat key=value configuration with dotted namespaces, e.g.
//
//   # comment
//   model.enc_dim = 128
//   pretrain.lr = 1e-3
//
// Values resolve as preset defaults <- config file <- command-line
// overrides. A key may be abbreviated to its last component(s) when that
// suffix is unique (enc_dim -> model.enc_dim).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dmae/constellation/dataset.hpp"
#include "dmae/train/trainer.hpp"

namespace dmae::cli {

struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 0;
  constellation::DatasetConfig data;
  std::string data_source = "disk";  // disk | memory
  model::ModelConfig model;
  train::TrainConfig pretrain;
  train::TrainConfig finetune;
  std::string eval_split = "test";
  std::uint64_t eval_mask_seed = 0;
  std::optional<double> latents_mask_ratio;

  // Propagates seed and model settings into the data and training configs
  // (render size follows model.img_size).
  void sync();
  void validate() const;
};

RunConfig preset_config(const std::string& name);

std::vector<std::string> config_keys();

// Canonical key for `key` (resolving unique suffixes); throws ConfigError
// naming the key when it is unknown or ambiguous.
std::string resolve_key(const std::string& key);

void set_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& cfg, const std::string& key);

using Assignment = std::pair<std::string, std::string>;

// "key=value" -> {key, value}; throws ConfigError on a missing '='.
Assignment parse_assignment(const std::string& text);

std::vector<Assignment> parse_config_text(const std::string& text, const std::string& origin = "<config>");
std::vector<Assignment> read_config_file(const std::filesystem::path& path);

// preset <- file <- overrides. The preset may itself be set in the file or
// overrides via the "preset" key; it is applied first.
RunConfig load_config(const std::string& preset, const std::optional<std::filesystem::path>& path,
                      const std::vector<Assignment>& overrides);

// Every key with its resolved value, one "key = value" line each, sorted.
std::string snapshot(const RunConfig& cfg);

}  // namespace dmae::cli
