#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dmae/tensor/tensor.hpp"

namespace dmae::losses {

struct LossWeights {
  double lambda_rec = 1.0;
  double lambda_cls = 0.1;

  void validate() const;
};

inline constexpr double kNormPixEps = 1e-6;

struct PatchStats {
  double mean = 0.0;
  double std = 1.0;  // sqrt(var + eps)
};

PatchStats patch_stats(std::span<const float> patch, double eps = kNormPixEps);

// (x - mean) / sqrt(var + eps) for one patch row (biased variance).
template <class T>
std::vector<T> norm_pix(std::span<const T> patch, double eps = kNormPixEps);

// Applies norm_pix to each consecutive row of width `row_width`.
template <class T>
std::vector<T> norm_pix_rows(std::span<const T> rows, std::size_t row_width, double eps = kNormPixEps);

// Inverse of norm_pix given the statistics it was computed with.
void denorm_pix(std::span<float> patch, const PatchStats& stats);

// Mean squared error between reconstruction rows and norm_pix(target) rows,
// over the listed rows only. Both are [rows, width]; gradient flows to the
// reconstruction. Rows not listed never influence the value.
template <class T>
tensor::Tensor<T> rec_loss(const tensor::Tensor<T>& reconstruction, const tensor::Tensor<T>& clean_target,
                           std::span<const std::size_t> masked_rows);

// Mean cross entropy; delegates to tensor::softmax_cross_entropy.
template <class T>
tensor::Tensor<T> cls_loss(const tensor::Tensor<T>& logits, std::span<const std::size_t> labels);

template <class T>
tensor::Tensor<T> total_loss(const tensor::Tensor<T>& rec, const tensor::Tensor<T>& cls, const LossWeights& w);

double total_loss(double rec, double cls, const LossWeights& w);

}  // namespace dmae::losses
