#pragma once

// DenoMAE2.0 network: ViT encoder over visible patches, a lightweight
// decoder that restores the full token sequence with a shared mask token,
// a per-token position classifier, and the fine-tuning head.
//
// Batches are flattened into row blocks: a batch of B sequences of length L
// is a [B * L, D] matrix.
//
// Parameter names:
//   encoder.patch_embed.{weight,bias}  encoder.pos_embed  encoder.blocks.<i>.*  encoder.norm.*
//   decoder.embed.*  decoder.mask_token  decoder.pos_embed  decoder.blocks.<i>.*  decoder.norm.*  decoder.pred.*
//   cls_head.fc.* (linear) or cls_head.fc1.*, cls_head.fc2.* (MLP)
//   head.{weight,bias} (fine-tuning)

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "dmae/image.hpp"
#include "dmae/losses/losses.hpp"
#include "dmae/model/config.hpp"
#include "dmae/model/mask.hpp"
#include "dmae/tensor/params.hpp"

namespace dmae::model {

using tensor::ParamStore;
using tensor::Tensor;

struct ForwardMode {
  bool train = false;  // enables dropout
  std::uint64_t dropout_seed = 0;
};

// Weights ~ truncated normal (sigma 0.02, cut at 2 sigma), biases and norm
// offsets zero, norm scales one. Each tensor is drawn from its own stream
// keyed by name, so a tensor's initial value depends only on (seed, name).
ParamStore<float> init_pretrain_params(const ModelConfig& cfg, std::uint64_t seed);
ParamStore<float> init_finetune_params(const ModelConfig& cfg, std::uint64_t seed);

bool is_encoder_param(std::string_view name);

// [B * N, P*P*C] patch rows of each image in turn.
template <class T>
Tensor<T> patch_rows(std::span<const Image> images, const ModelConfig& cfg);

// visible_patches: [B * L, P*P*C]; ids: original spatial index of each row.
template <class T>
Tensor<T> encode(const ParamStore<T>& params, const ModelConfig& cfg, const Tensor<T>& visible_patches,
                 std::span<const std::size_t> ids, std::size_t seq_len, const ForwardMode& mode = {});

// q_v rows follow each plan's ascending visible_ids. Returns [B * N, P*P*C].
template <class T>
Tensor<T> decode(const ParamStore<T>& params, const ModelConfig& cfg, const Tensor<T>& q_v,
                 std::span<const MaskPlan> plans, const ForwardMode& mode = {});

template <class T>
Tensor<T> classify_patches(const ParamStore<T>& params, const ModelConfig& cfg, const Tensor<T>& q_v);

template <class T>
struct PretrainOutput {
  Tensor<T> total;
  Tensor<T> rec;
  Tensor<T> cls;
  Tensor<T> recon;   // [B * N, P*P*C], normalized pixel space
  Tensor<T> logits;  // [B * N_vis, N_vis]
  std::vector<MaskPlan> plans;
  std::vector<std::size_t> labels;
};

// Masks the noisy images, reconstructs the clean images' masked patches and
// classifies visible-patch positions. A branch whose weight is zero is
// evaluated without graph recording.
template <class T>
PretrainOutput<T> forward_pretrain(const ParamStore<T>& params, const ModelConfig& cfg, const losses::LossWeights& w,
                                   std::span<const Image> noisy, std::span<const Image> clean,
                                   std::span<const MaskPlan> plans, const ForwardMode& mode = {});

// Sample b uses plan_mask(N, mask_ratio, mask_seed(seed, b)).
template <class T>
PretrainOutput<T> forward_pretrain(const ParamStore<T>& params, const ModelConfig& cfg, const losses::LossWeights& w,
                                   std::span<const Image> noisy, std::span<const Image> clean, std::uint64_t seed,
                                   const ForwardMode& mode = {});

std::uint64_t mask_seed(std::uint64_t seed, std::size_t sample);

// Mean-pooled encoder features, [B, enc_dim]. With plans, each sample is
// encoded from its visible patches only.
template <class T>
Tensor<T> encode_pooled(const ParamStore<T>& params, const ModelConfig& cfg, std::span<const Image> images,
                        std::span<const MaskPlan> plans = {}, const ForwardMode& mode = {});

// All patches, mean pool, downstream head: [B, n_downstream_classes].
template <class T>
Tensor<T> forward_finetune(const ParamStore<T>& params, const ModelConfig& cfg, std::span<const Image> images,
                           const ForwardMode& mode = {});

}  // namespace dmae::model
