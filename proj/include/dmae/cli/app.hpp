#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "dmae/cli/config.hpp"
#include "dmae/train/sources.hpp"

namespace dmae::cli {

inline constexpr const char* kOutRootEnv = "DMAE_OUT_ROOT";

// $DMAE_OUT_ROOT, or "runs" when unset.
std::filesystem::path out_root();

// data.root, or <out_root>/data when empty.
std::filesystem::path data_root(const RunConfig& cfg);

// One split of the configured dataset: read from disk, or rendered in
// memory when data.source = memory.
std::unique_ptr<train::PairSource> open_split(const RunConfig& cfg, const std::string& split);

// Exit codes: 0 success, 1 failed run, 2 usage or configuration error.
int run(int argc, char** argv);

}  // namespace dmae::cli
