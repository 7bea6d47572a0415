#include "dmae/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>

#include "dmae/errors.hpp"
#include "dmae/model/network.hpp"
#include "dmae/tensor/checkpoint.hpp"
#include "dmae/tensor/ops.hpp"
#include "dmae/tensor/optim.hpp"
#include "dmae/train/seeds.hpp"

namespace dmae::train {

namespace fs = std::filesystem;
using tensor::AdamW;
using tensor::NamedArray;
using tensor::ParamStore;

std::string phase_name(Phase phase) { return phase == Phase::pretrain ? "pretrain" : "finetune"; }

TrainConfig TrainConfig::pretrain_defaults() { return TrainConfig{}; }

TrainConfig TrainConfig::finetune_defaults() {
  TrainConfig c;
  c.phase = Phase::finetune;
  c.batch_size = 32;
  c.epochs = 150;
  c.lr = 1e-4;
  return c;
}

void TrainConfig::validate() const {
  model.validate();
  if (batch_size == 0) throw ConfigError("train: batch_size must be positive");
  if (epochs == 0) throw ConfigError("train: epochs must be positive");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ConfigError("train: lr must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train: weight_decay must be non-negative");
  if (phase == Phase::pretrain) weights.validate();
}

nlohmann::json TrainConfig::to_json() const {
  const auto& m = model;
  return {{"phase", phase_name(phase)},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"max_steps", max_steps},
          {"lr", lr},
          {"weight_decay", weight_decay},
          {"cosine_schedule", cosine_schedule},
          {"fixed_masks", fixed_masks},
          {"lambda_rec", weights.lambda_rec},
          {"lambda_cls", weights.lambda_cls},
          {"master_seed", master_seed},
          {"checkpoint_every", checkpoint_every},
          {"model",
           {{"img_size", m.img_size},
            {"patch_size", m.patch_size},
            {"in_channels", m.in_channels},
            {"enc_dim", m.enc_dim},
            {"enc_depth", m.enc_depth},
            {"enc_heads", m.enc_heads},
            {"dec_dim", m.dec_dim},
            {"dec_depth", m.dec_depth},
            {"dec_heads", m.dec_heads},
            {"mask_ratio", m.mask_ratio},
            {"cls_head_hidden", m.cls_head_hidden},
            {"n_downstream_classes", m.n_downstream_classes},
            {"mlp_ratio", m.mlp_ratio},
            {"dropout", m.dropout},
            {"pos_embed", m.pos_embed}}}};
}

std::string config_hash(const TrainConfig& cfg) {
  const auto text = cfg.to_json().dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

nlohmann::json EpochRecord::to_json(Phase phase) const {
  nlohmann::json j = {{"phase", phase_name(phase)}, {"epoch", epoch}, {"step", step}};
  if (phase == Phase::pretrain) {
    j["total_loss"] = total;
    j["rec_loss"] = rec;
    j["cls_loss"] = cls;
    j["position_accuracy"] = accuracy;
  } else {
    j["loss"] = total;
    j["accuracy"] = accuracy;
    if (eval_accuracy) j["eval_accuracy"] = *eval_accuracy;
  }
  j["wall_seconds"] = wall_seconds;
  j["seed"] = seed;
  j["config_hash"] = config_hash;
  return j;
}

namespace {

constexpr const char* kStateName = "trainer.state";

struct ResumeState {
  std::size_t epoch = 0;
  std::size_t step = 0;
};

void save_state(const fs::path& path, const ParamStore<float>& params, const AdamW<float>& opt,
                const ResumeState& state) {
  auto arrays = tensor::to_arrays(params);
  const auto& moments = opt.state();
  for (const auto& e : params.entries()) {
    auto it = moments.find(e.name);
    if (it == moments.end()) continue;
    arrays.push_back({"optim.m." + e.name, e.value.shape(), it->second.first});
    arrays.push_back({"optim.v." + e.name, e.value.shape(), it->second.second});
  }
  arrays.push_back({kStateName, {2}, {static_cast<float>(state.epoch), static_cast<float>(state.step)}});
  tensor::save_checkpoint(path, arrays);
}

ResumeState load_state(const fs::path& path, ParamStore<float>& params, AdamW<float>& opt) {
  const auto arrays = tensor::load_checkpoint(path);
  const auto missing = tensor::load_into(params, arrays);
  if (!missing.empty()) {
    std::string names;
    for (const auto& n : missing) names += " " + n;
    throw IoError("checkpoint " + path.string() + " lacks parameters:" + names);
  }
  std::unordered_map<std::string, AdamW<float>::Moments> moments;
  ResumeState state;
  bool have_state = false;
  for (const auto& a : arrays) {
    if (a.name == kStateName) {
      if (a.values.size() != 2) throw IoError("malformed trainer state in " + path.string());
      state.epoch = static_cast<std::size_t>(a.values[0]);
      state.step = static_cast<std::size_t>(a.values[1]);
      have_state = true;
    } else if (a.name.starts_with("optim.m.")) {
      moments[a.name.substr(8)].first = a.values;
    } else if (a.name.starts_with("optim.v.")) {
      moments[a.name.substr(8)].second = a.values;
    }
  }
  if (!have_state) throw IoError("checkpoint " + path.string() + " has no trainer state; cannot resume");
  opt.restore(state.step, std::move(moments));
  return state;
}

double scheduled_lr(const TrainConfig& cfg, std::size_t step, std::size_t total_steps) {
  if (!cfg.cosine_schedule || total_steps == 0) return cfg.lr;
  const double t = std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
  return cfg.lr * 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

template <class T>
std::vector<std::size_t> argmax_rows(const tensor::Tensor<T>& logits) {
  const std::size_t rows = logits.dim(0);
  const std::size_t k = logits.dim(1);
  const auto d = logits.data();
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (d[r * k + j] > d[r * k + best]) best = j;
    out[r] = best;
  }
  return out;
}

double match_fraction(const std::vector<std::size_t>& pred, std::span<const std::size_t> labels) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

// Shared epoch/step bookkeeping for both phases.
class Loop {
 public:
  Loop(const TrainConfig& cfg, const PairSource& data, const TrainHooks& hooks, ParamStore<float>& params)
      : cfg_(cfg), data_(data), hooks_(hooks), params_(params), seeds_(cfg.master_seed),
        opt_(tensor::AdamWConfig{cfg.lr, cfg.weight_decay}) {
    log_.config_hash = config_hash(cfg);
    const std::size_t per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
    total_steps_ = per_epoch * cfg.epochs;
    if (cfg.max_steps > 0) total_steps_ = std::min(total_steps_, cfg.max_steps);
  }

  void resume(const fs::path& path) { state_ = load_state(path, params_, opt_); }

  // step_fn(batch indices, epoch) -> StepRecord with losses filled in; it
  // must leave gradients on params_.
  template <class StepFn>
  TrainLog run(StepFn step_fn) {
    if (data_.size() == 0) throw ConfigError("train: empty dataset");
    if (!cfg_.out_dir.empty()) {
      fs::create_directories(cfg_.out_dir);
      const auto mode = state_.epoch == 0 ? std::ios::trunc : std::ios::app;
      log_file_.open(cfg_.out_dir / kTrainLogFile, std::ios::out | mode);
      if (!log_file_) throw IoError("cannot open training log in " + cfg_.out_dir.string());
    }
    bool stop = false;
    for (std::size_t epoch = state_.epoch + 1; epoch <= cfg_.epochs && !stop; ++epoch) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto order = shuffled_indices(data_.size(), seeds_.stream(Stream::shuffle, {epoch}));
      EpochRecord rec;
      rec.epoch = epoch;
      rec.seed = cfg_.master_seed;
      rec.config_hash = log_.config_hash;
      double weight = 0.0;
      for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        if (cfg_.max_steps > 0 && state_.step >= cfg_.max_steps) {
          stop = true;
          break;
        }
        const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
        std::span<const std::size_t> batch(order.data() + start, end - start);
        opt_.set_lr(scheduled_lr(cfg_, state_.step, total_steps_));
        params_.zero_grad();
        StepRecord s = step_fn(batch, epoch, state_.step);
        opt_.step(params_);
        s.step = ++state_.step;
        const double w = static_cast<double>(batch.size());
        rec.total += w * s.total;
        rec.rec += w * s.rec;
        rec.cls += w * s.cls;
        rec.accuracy += w * s.accuracy;
        weight += w;
        log_.steps.push_back(s);
        if (hooks_.on_step) hooks_.on_step(s);
      }
      if (weight == 0.0) break;
      rec.total /= weight;
      rec.rec /= weight;
      rec.cls /= weight;
      rec.accuracy /= weight;
      rec.step = state_.step;
      state_.epoch = epoch;
      if (cfg_.phase == Phase::finetune && hooks_.eval != nullptr)
        rec.eval_accuracy = classify_accuracy(params_, cfg_.model, *hooks_.eval);
      rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      finish_epoch(rec, stop || epoch == cfg_.epochs);
    }
    if (!cfg_.out_dir.empty()) {
      checkpoint_ = cfg_.out_dir / kFinalCheckpoint;
      save_state(*checkpoint_, params_, opt_, state_);
    }
    return std::move(log_);
  }

  const std::optional<fs::path>& checkpoint() const { return checkpoint_; }

 private:
  void finish_epoch(const EpochRecord& rec, bool last) {
    log_.epochs.push_back(rec);
    if (log_file_.is_open()) log_file_ << rec.to_json(cfg_.phase).dump() << "\n" << std::flush;
    if (cfg_.verbose) {
      std::fprintf(stderr, "[%s] epoch %zu/%zu step %zu loss %.5f acc %.4f%s (%.1fs)\n",
                   phase_name(cfg_.phase).c_str(), rec.epoch, cfg_.epochs, rec.step, rec.total, rec.accuracy,
                   rec.eval_accuracy ? (" eval " + std::to_string(*rec.eval_accuracy)).c_str() : "",
                   rec.wall_seconds);
    }
    if (hooks_.on_epoch) hooks_.on_epoch(rec);
    if (!cfg_.out_dir.empty() && cfg_.checkpoint_every > 0 && !last && rec.epoch % cfg_.checkpoint_every == 0)
      save_state(cfg_.out_dir / kLastCheckpoint, params_, opt_, state_);
  }

  const TrainConfig& cfg_;
  const PairSource& data_;
  const TrainHooks& hooks_;
  ParamStore<float>& params_;
  SeedStreams seeds_;
  AdamW<float> opt_;
  ResumeState state_;
  std::size_t total_steps_ = 0;
  TrainLog log_;
  std::ofstream log_file_;
  std::optional<fs::path> checkpoint_;
};

void require_finite(double value, std::size_t step) {
  if (!std::isfinite(value)) throw NumericError("non-finite loss at step " + std::to_string(step + 1));
}

}  // namespace

TrainResult pretrain(const TrainConfig& cfg, const PairSource& data, const std::optional<fs::path>& resume,
                     const TrainHooks& hooks) {
  if (cfg.phase != Phase::pretrain) throw ConfigError("pretrain: config phase is " + phase_name(cfg.phase));
  cfg.validate();
  const SeedStreams seeds(cfg.master_seed);
  TrainResult result{model::init_pretrain_params(cfg.model, seeds.stream(Stream::init)), {}, std::nullopt};
  Loop loop(cfg, data, hooks, result.params);
  if (resume) loop.resume(*resume);

  const std::size_t n = cfg.model.n_patches();
  result.log = loop.run([&](std::span<const std::size_t> batch, std::size_t epoch, std::size_t step) {
    std::vector<Image> noisy, clean;
    std::vector<model::MaskPlan> plans;
    for (std::size_t idx : batch) {
      auto s = data.get(idx);
      noisy.push_back(std::move(s.noisy));
      clean.push_back(std::move(s.clean));
      plans.push_back(model::plan_mask(n, cfg.model.mask_ratio, seeds.stream(Stream::mask, {cfg.fixed_masks ? 0 : epoch, idx})));
    }
    const model::ForwardMode mode{true, seeds.stream(Stream::dropout, {step})};
    auto out = model::forward_pretrain<float>(result.params, cfg.model, cfg.weights, noisy, clean,
                                              std::span<const model::MaskPlan>(plans), mode);
    StepRecord s;
    s.total = out.total.item();
    s.rec = out.rec.item();
    s.cls = out.cls.item();
    require_finite(s.total, step);
    s.accuracy = match_fraction(argmax_rows(out.logits), out.labels);
    out.total.backward();
    return s;
  });
  result.checkpoint = loop.checkpoint();
  return result;
}

ParamStore<float> finetune_init(const TrainConfig& cfg, const std::optional<fs::path>& pretrained) {
  const SeedStreams seeds(cfg.master_seed);
  auto params = model::init_finetune_params(cfg.model, seeds.stream(Stream::init));
  if (!pretrained) return params;
  auto arrays = tensor::load_checkpoint(*pretrained);
  std::erase_if(arrays, [](const NamedArray& a) { return !model::is_encoder_param(a.name); });
  const auto missing = tensor::load_into(params, arrays);
  std::string names;
  for (const auto& m : missing)
    if (model::is_encoder_param(m)) names += " " + m;
  if (!names.empty()) throw IoError("pretrained checkpoint " + pretrained->string() + " lacks encoder tensors:" + names);
  return params;
}

TrainResult finetune(const TrainConfig& cfg, const PairSource& data, const std::optional<fs::path>& pretrained,
                     const TrainHooks& hooks) {
  if (cfg.phase != Phase::finetune) throw ConfigError("finetune: config phase is " + phase_name(cfg.phase));
  cfg.validate();
  const SeedStreams seeds(cfg.master_seed);
  TrainResult result{finetune_init(cfg, pretrained), {}, std::nullopt};
  Loop loop(cfg, data, hooks, result.params);

  result.log = loop.run([&](std::span<const std::size_t> batch, std::size_t, std::size_t step) {
    std::vector<Image> images;
    std::vector<std::size_t> labels;
    for (std::size_t idx : batch) {
      auto s = data.get(idx);
      if (s.label >= cfg.model.n_downstream_classes)
        throw IndexError("finetune: label " + std::to_string(s.label) + " exceeds class count");
      images.push_back(std::move(s.noisy));
      labels.push_back(s.label);
    }
    const model::ForwardMode mode{true, seeds.stream(Stream::dropout, {step})};
    auto logits = model::forward_finetune<float>(result.params, cfg.model, images, mode);
    auto loss = tensor::softmax_cross_entropy(logits, std::span<const std::size_t>(labels));
    StepRecord s;
    s.total = loss.item();
    s.cls = s.total;
    require_finite(s.total, step);
    s.accuracy = match_fraction(argmax_rows(logits), labels);
    loss.backward();
    return s;
  });
  result.checkpoint = loop.checkpoint();
  return result;
}

double classify_accuracy(const ParamStore<float>& params, const model::ModelConfig& cfg, const PairSource& data,
                         std::size_t batch_size) {
  tensor::NoGradGuard no_grad;
  std::size_t hit = 0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<Image> images;
    std::vector<std::size_t> labels;
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) {
      auto s = data.get(i);
      images.push_back(std::move(s.noisy));
      labels.push_back(s.label);
    }
    const auto pred = argmax_rows(model::forward_finetune<float>(params, cfg, images));
    for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == labels[i];
  }
  return data.size() == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(data.size());
}

}  // namespace dmae::train
