#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dmae/losses/losses.hpp"
#include "dmae/model/config.hpp"
#include "dmae/tensor/params.hpp"
#include "dmae/train/sources.hpp"
#include "json.hpp"

namespace dmae::train {

enum class Phase { pretrain, finetune };

std::string phase_name(Phase phase);

struct TrainConfig {
  Phase phase = Phase::pretrain;
  model::ModelConfig model = model::ModelConfig::desk();
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  std::size_t max_steps = 0;  // 0 = run all epochs
  double lr = 3e-4;
  double weight_decay = 0.05;
  bool cosine_schedule = false;
  bool fixed_masks = false;  // pretrain: one mask per sample for the whole run
  losses::LossWeights weights;
  std::uint64_t master_seed = 0;
  std::size_t checkpoint_every = 1;  // epochs; 0 = final checkpoint only
  std::filesystem::path out_dir;     // empty = keep everything in memory
  bool verbose = false;              // progress lines on stderr

  static TrainConfig pretrain_defaults();
  static TrainConfig finetune_defaults();

  void validate() const;
  nlohmann::json to_json() const;
};

// FNV-1a over the canonical JSON form, as 16 hex digits.
std::string config_hash(const TrainConfig& cfg);

struct StepRecord {
  std::size_t step = 0;
  double total = 0.0;
  double rec = 0.0;
  double cls = 0.0;
  double accuracy = 0.0;  // position accuracy (pretrain) or scheme accuracy (finetune)
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t step = 0;   // optimizer steps completed
  double total = 0.0;     // pretrain: weighted loss; finetune: cross entropy
  double rec = 0.0;
  double cls = 0.0;
  double accuracy = 0.0;
  std::optional<double> eval_accuracy;
  double wall_seconds = 0.0;
  std::uint64_t seed = 0;
  std::string config_hash;

  nlohmann::json to_json(Phase phase) const;
};

struct TrainLog {
  std::string config_hash;
  std::vector<EpochRecord> epochs;
  std::vector<StepRecord> steps;
};

struct TrainResult {
  tensor::ParamStore<float> params;
  TrainLog log;
  std::optional<std::filesystem::path> checkpoint;  // final checkpoint when out_dir is set
};

struct TrainHooks {
  // Finetune only: scored after every epoch into EpochRecord::eval_accuracy.
  const PairSource* eval = nullptr;
  std::function<void(const StepRecord&)> on_step;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Resume state lives in the checkpoint as extra tensors next to the
// parameters: "optim.m.<name>", "optim.v.<name>" and "trainer.state"
// ([epochs completed, steps completed]).
inline constexpr const char* kLastCheckpoint = "last.ckpt";
inline constexpr const char* kFinalCheckpoint = "final.ckpt";
inline constexpr const char* kTrainLogFile = "train_log.jsonl";

// Pretraining on noisy/clean pairs. With `resume`, training continues after
// the epochs recorded in that checkpoint. Throws NumericError on a
// non-finite loss; checkpoints already on disk are left untouched.
TrainResult pretrain(const TrainConfig& cfg, const PairSource& data,
                     const std::optional<std::filesystem::path>& resume = std::nullopt, const TrainHooks& hooks = {});

// Fine-tuning on scheme labels from the noisy images. The encoder comes
// from `pretrained` when given (missing encoder tensors throw IoError
// listing them), otherwise from random init.
TrainResult finetune(const TrainConfig& cfg, const PairSource& data,
                     const std::optional<std::filesystem::path>& pretrained = std::nullopt,
                     const TrainHooks& hooks = {});

// Fine-tuning parameters for `cfg`, with the encoder copied from a
// pretraining checkpoint when one is given.
tensor::ParamStore<float> finetune_init(const TrainConfig& cfg,
                                        const std::optional<std::filesystem::path>& pretrained);

// Scheme accuracy of fine-tuned params over a source.
double classify_accuracy(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg,
                         const PairSource& data, std::size_t batch_size = 32);

}  // namespace dmae::train
