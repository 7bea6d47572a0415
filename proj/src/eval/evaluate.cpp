#include "dmae/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "dmae/errors.hpp"
#include "dmae/eval/metrics.hpp"
#include "dmae/losses/losses.hpp"
#include "dmae/model/network.hpp"
#include "dmae/model/patches.hpp"
#include "dmae/sigsynth/sigsynth.hpp"

namespace dmae::eval {

nlohmann::json DenoiseSummary::to_json() const {
  return {{"count", count},
          {"psnr_noisy", psnr_noisy},
          {"psnr_denoised", psnr_denoised},
          {"ssim_noisy", ssim_noisy},
          {"ssim_denoised", ssim_denoised}};
}

std::vector<double> EvalReport::per_class_accuracy() const {
  std::vector<double> out;
  for (std::size_t k = 0; k < confusion.size(); ++k) {
    std::size_t row = 0;
    for (auto c : confusion[k]) row += c;
    out.push_back(row == 0 ? 0.0 : static_cast<double>(confusion[k][k]) / static_cast<double>(row));
  }
  return out;
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json j;
  j["total"] = total;
  j["correct"] = correct;
  j["accuracy"] = accuracy();
  j["classes"] = class_names;
  j["per_class_accuracy"] = per_class_accuracy();
  j["confusion"] = confusion;
  j["per_snr"] = nlohmann::json::array();
  for (const auto& r : per_snr)
    j["per_snr"].push_back({{"snr_db", r.snr_db}, {"correct", r.correct}, {"total", r.total}, {"accuracy", r.accuracy()}});
  if (denoising) j["denoising"] = denoising->to_json();
  return j;
}

std::string EvalReport::to_text() const {
  std::ostringstream os;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "accuracy %.4f (%zu/%zu)\n", accuracy(), correct, total);
  os << buf << "\nper class\n";
  const auto pc = per_class_accuracy();
  for (std::size_t k = 0; k < pc.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "  %-8s %.4f\n", class_names[k].c_str(), pc[k]);
    os << buf;
  }
  os << "\nconfusion (rows = true, cols = predicted)\n        ";
  for (const auto& n : class_names) {
    std::snprintf(buf, sizeof(buf), "%7.6s", n.c_str());
    os << buf;
  }
  os << "\n";
  for (std::size_t k = 0; k < confusion.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "  %-6.6s", class_names[k].c_str());
    os << buf;
    for (auto c : confusion[k]) {
      std::snprintf(buf, sizeof(buf), "%7zu", c);
      os << buf;
    }
    os << "\n";
  }
  os << "\nper SNR\n";
  for (const auto& r : per_snr) {
    std::snprintf(buf, sizeof(buf), "  %6.1f dB  %.4f (%zu/%zu)\n", r.snr_db, r.accuracy(), r.correct, r.total);
    os << buf;
  }
  if (denoising) {
    const auto& d = *denoising;
    std::snprintf(buf, sizeof(buf), "\ndenoising over %zu pairs\n", d.count);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  PSNR noisy %.4f dB  denoised %.4f dB\n", d.psnr_noisy, d.psnr_denoised);
    os << buf;
    std::snprintf(buf, sizeof(buf), "  SSIM noisy %.6f  denoised %.6f\n", d.ssim_noisy, d.ssim_denoised);
    os << buf;
  }
  return os.str();
}

EvalReport report_from_predictions(std::span<const std::size_t> labels, std::span<const std::size_t> predictions,
                                   std::span<const double> snr_db, std::size_t n_classes) {
  if (labels.size() != predictions.size() || labels.size() != snr_db.size())
    throw DimensionError("report: labels, predictions and SNRs differ in length");
  EvalReport r;
  for (std::size_t k = 0; k < n_classes; ++k) {
    r.class_names.push_back(k < sigsynth::kAllSchemes.size()
                                ? std::string(sigsynth::scheme_name(sigsynth::scheme_from_index(k)))
                                : "class" + std::to_string(k));
  }
  r.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
  std::map<double, SnrRow> snr;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= n_classes || predictions[i] >= n_classes)
      throw DimensionError("report: class index exceeds class count " + std::to_string(n_classes));
    const bool hit = labels[i] == predictions[i];
    ++r.confusion[labels[i]][predictions[i]];
    ++r.total;
    r.correct += hit;
    auto& row = snr[snr_db[i]];
    row.snr_db = snr_db[i];
    ++row.total;
    row.correct += hit;
  }
  for (const auto& [_, row] : snr) r.per_snr.push_back(row);
  return r;
}

EvalReport evaluate_classifier(const Classifier& classify, const train::PairSource& data, std::size_t n_classes,
                               std::size_t batch_size) {
  std::vector<std::size_t> labels, preds;
  std::vector<double> snrs;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<Image> images;
    for (std::size_t i = start; i < std::min(data.size(), start + batch_size); ++i) {
      auto s = data.get(i);
      images.push_back(std::move(s.noisy));
      labels.push_back(s.label);
      snrs.push_back(s.snr_db);
    }
    const auto p = classify(images);
    if (p.size() != images.size()) throw DimensionError("classifier returned the wrong number of predictions");
    preds.insert(preds.end(), p.begin(), p.end());
  }
  return report_from_predictions(labels, preds, snrs, n_classes);
}

Classifier model_classifier(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg) {
  const auto& head = params.get("head.weight");
  if (head.rank() != 2 || head.dim(1) != cfg.n_downstream_classes) {
    throw DimensionError("checkpoint head has " + std::to_string(head.rank() == 2 ? head.dim(1) : 0) +
                         " classes, dataset has " + std::to_string(cfg.n_downstream_classes));
  }
  return [&params, cfg](std::span<const Image> images) {
    tensor::NoGradGuard no_grad;
    const auto logits = model::forward_finetune<float>(params, cfg, images);
    const std::size_t k = logits.dim(1);
    const auto d = logits.data();
    std::vector<std::size_t> out(images.size());
    for (std::size_t r = 0; r < out.size(); ++r)
      out[r] = static_cast<std::size_t>(std::max_element(d.begin() + r * k, d.begin() + (r + 1) * k) -
                                        (d.begin() + r * k));
    return out;
  };
}

EvalReport evaluate_classifier(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg,
                               const train::PairSource& data, std::size_t batch_size) {
  return evaluate_classifier(model_classifier(params, cfg), data, cfg.n_downstream_classes, batch_size);
}

Denoiser identity_denoiser() {
  return [](const Image& noisy, std::size_t) { return noisy; };
}

Image denoise_image(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg, const Image& noisy,
                    const model::MaskPlan& plan) {
  tensor::NoGradGuard no_grad;
  const std::size_t pd = cfg.patch_dim();
  auto rows = model::patchify(noisy, cfg.patch_size);
  std::vector<std::size_t> ids = plan.visible_ids;
  std::vector<float> visible;
  for (std::size_t id : ids) visible.insert(visible.end(), rows.begin() + id * pd, rows.begin() + (id + 1) * pd);
  const auto vis = tensor::Tensor<float>::from({ids.size(), pd}, std::move(visible));
  const auto q_v = model::encode(params, cfg, vis, ids, ids.size());
  const auto recon = model::decode(params, cfg, q_v, std::span<const model::MaskPlan>(&plan, 1));
  const auto out = recon.data();
  for (std::size_t id : plan.masked_ids) {
    std::span<float> patch(rows.data() + id * pd, pd);
    const auto stats = losses::patch_stats(patch);
    std::copy(out.begin() + id * pd, out.begin() + (id + 1) * pd, patch.begin());
    losses::denorm_pix(patch, stats);
    for (auto& v : patch) v = std::clamp(v, 0.0f, 1.0f);
  }
  return model::unpatchify(rows, noisy.channels, noisy.height, noisy.width, cfg.patch_size);
}

Denoiser model_denoiser(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg, std::uint64_t seed) {
  return [&params, cfg, seed](const Image& noisy, std::size_t index) {
    return denoise_image(params, cfg, noisy, model::plan_mask(cfg.n_patches(), cfg.mask_ratio, model::mask_seed(seed, index)));
  };
}

DenoiseSummary evaluate_denoising(const Denoiser& denoise, const train::PairSource& data) {
  DenoiseSummary s;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto pair = data.get(i);
    const auto out = denoise(pair.noisy, i);
    s.psnr_noisy += psnr(pair.noisy, pair.clean).db;
    s.psnr_denoised += psnr(out, pair.clean).db;
    s.ssim_noisy += ssim(pair.noisy, pair.clean);
    s.ssim_denoised += ssim(out, pair.clean);
    ++s.count;
  }
  if (s.count > 0) {
    const double n = static_cast<double>(s.count);
    s.psnr_noisy /= n;
    s.psnr_denoised /= n;
    s.ssim_noisy /= n;
    s.ssim_denoised /= n;
  }
  return s;
}

void export_latents(const tensor::ParamStore<float>& params, const model::ModelConfig& cfg,
                    const train::PairSource& data, std::optional<double> mask_ratio, std::uint64_t seed,
                    const std::filesystem::path& path) {
  const bool masked = mask_ratio && *mask_ratio > 0.0;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot write latents to " + path.string());
  os << "label,snr_db";
  for (std::size_t j = 0; j < cfg.enc_dim; ++j) os << ",f" << j;
  os << "\n";
  tensor::NoGradGuard no_grad;
  char buf[32];
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = data.get(i);
    std::vector<model::MaskPlan> plans;
    if (masked) plans.push_back(model::plan_mask(cfg.n_patches(), *mask_ratio, model::mask_seed(seed, i)));
    const auto z = model::encode_pooled<float>(params, cfg, std::span<const Image>(&s.noisy, 1), plans);
    std::snprintf(buf, sizeof(buf), "%.17g", s.snr_db);
    os << s.label << "," << buf;
    for (float v : z.data()) {
      std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
      os << "," << buf;
    }
    os << "\n";
  }
  if (!os) throw IoError("failed writing " + path.string());
}

}  // namespace dmae::eval
