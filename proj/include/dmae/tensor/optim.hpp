#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmae/tensor/params.hpp"

namespace dmae::tensor {

struct AdamWConfig {
  double lr = 3e-4;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer with decoupled weight decay and bias
// correction:
//   p <- p - lr * wd * p                      (decay-flagged params only)
//   m <- b1 m + (1 - b1) g,  v <- b2 v + (1 - b2) g^2
//   p <- p - lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
template <class T>
class AdamW {
 public:
  struct Moments {
    std::vector<T> first;
    std::vector<T> second;
  };

  explicit AdamW(AdamWConfig config = {}) : config_(config) {}

  // Applies one update from the grads currently held by `params`. Params
  // without a grad are treated as having a zero gradient. Throws
  // NumericError naming the parameter if any gradient is NaN/Inf; no
  // parameter is modified in that case.
  void step(ParamStore<T>& params);

  std::uint64_t step_count() const { return step_; }
  const AdamWConfig& config() const { return config_; }
  void set_lr(double lr) { config_.lr = lr; }

  const std::unordered_map<std::string, Moments>& state() const { return moments_; }
  // Restores state saved from a previous run (checkpoint resume).
  void restore(std::uint64_t step, std::unordered_map<std::string, Moments> moments);

 private:
  AdamWConfig config_;
  std::uint64_t step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
};

}  // namespace dmae::tensor
