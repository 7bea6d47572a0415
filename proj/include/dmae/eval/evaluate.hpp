#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmae/image.hpp"
#include "dmae/model/config.hpp"
#include "dmae/model/mask.hpp"
#include "dmae/tensor/params.hpp"
#include "dmae/train/sources.hpp"
#include "json.hpp"

namespace dmae::eval {

struct DenoiseSummary {
  std::size_t count = 0;
  double psnr_noisy = 0.0;  // mean PSNR(noisy, clean)
  double psnr_denoised = 0.0;
  double ssim_noisy = 0.0;
  double ssim_denoised = 0.0;

  nlohmann::json to_json() const;
};

struct SnrRow {
  double snr_db = 0.0;
  std::size_t correct = 0;
  std::size_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct EvalReport {
  std::vector<std::string> class_names;
  std::size_t total = 0;
  std::size_t correct = 0;
  std::vector<std::vector<std::size_t>> confusion;  // [true][predicted]
  std::vector<SnrRow> per_snr;                      // ascending SNR
  std::optional<DenoiseSummary> denoising;

  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
  std::vector<double> per_class_accuracy() const;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

// Predicted class per image.
using Classifier = std::function<std::vector<std::size_t>(std::span<const Image>)>;

EvalReport report_from_predictions(std::span<const std::size_t> labels, std::span<const std::size_t> predictions,
                                   std::span<const double> snr_db, std::size_t n_classes);

EvalReport evaluate_classifier(const Classifier& classify, const train::PairSource& data, std::size_t n_classes,
                               std::size_t batch_size = 32);

// Argmax of the fine-tuned network's logits. Throws DimensionError when the
// head's width differs from n_classes.
Classifier model_classifier(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg);

EvalReport evaluate_classifier(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg,
                               const train::PairSource& data, std::size_t batch_size = 32);

// Produces a denoised image for sample `index` of the evaluated source.
using Denoiser = std::function<Image(const Image& noisy, std::size_t index)>;

Denoiser identity_denoiser();

// Decoder output de-normalized with the noisy input's per-patch statistics,
// visible patches copied from the input, clamped to [0, 1].
Image denoise_image(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg, const Image& noisy,
                    const model::MaskPlan& plan);

// Sample i is masked with plan_mask(N, mask_ratio, model::mask_seed(seed, i)).
Denoiser model_denoiser(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg, std::uint64_t seed);

DenoiseSummary evaluate_denoising(const Denoiser& denoise, const train::PairSource& data);

// CSV: label,snr_db,f0..f{enc_dim-1}; one row per sample. A mask ratio of
// zero or none encodes every patch.
void export_latents(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg,
                    const train::PairSource& data, std::optional<double> mask_ratio, std::uint64_t seed,
                    const std::filesystem::path& path);

}  // namespace dmae::eval
