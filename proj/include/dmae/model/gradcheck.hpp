#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmae/losses/losses.hpp"
#include "dmae/model/config.hpp"

namespace dmae::model {

struct GradcheckEntry {
  std::string name;
  std::size_t numel = 0;
  double rel_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double max_abs_error = 0.0;
  double grad_norm = 0.0;
  bool zero_gradient = false;  // both norms below kZeroGradNorm; rel_error reported as 0
};

// Below this norm a gradient counts as identically zero. Attention key
// biases are such parameters: softmax ignores a per-query constant shift.
inline constexpr double kZeroGradNorm = 1e-8;

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  double max_rel_error = 0.0;
};

// img 16, patch 8, enc_dim 8, depth 1, decoder depth 1.
ModelConfig gradcheck_config();

// Compares the analytic gradient of the pretraining total loss with central
// differences at double precision, for every element of every parameter.
// Inputs are `batch` random noisy/clean image pairs.
GradcheckReport gradcheck_pretrain(const ModelConfig& cfg, const losses::LossWeights& w, std::uint64_t seed,
                                   std::size_t batch = 2, double step = 1e-6);

}  // namespace dmae::model
