#include "dmae/model/gradcheck.hpp"

#include <cmath>

#include "dmae/model/network.hpp"
#include "dmae/rng.hpp"

namespace dmae::model {

ModelConfig gradcheck_config() {
  ModelConfig c;
  c.img_size = 16;
  c.patch_size = 8;
  c.enc_dim = 8;
  c.enc_depth = 1;
  c.enc_heads = 2;
  c.dec_dim = 8;
  c.dec_depth = 1;
  c.dec_heads = 2;
  c.mask_ratio = 0.5;
  c.cls_head_hidden = 8;
  return c;
}

GradcheckReport gradcheck_pretrain(const ModelConfig& cfg, const losses::LossWeights& w, std::uint64_t seed,
                                   std::size_t batch, double step) {
  auto params = tensor::cast_params<double>(init_pretrain_params(cfg, seed));
  Rng rng(derive_seed(seed, {0x4743ULL}));
  for (auto& e : params.entries()) {
    for (auto& v : e.value.mutable_data()) v += 0.3 * rng.normal();
  }
  std::vector<Image> noisy, clean;
  for (std::size_t b = 0; b < batch; ++b) {
    Image n(cfg.in_channels, cfg.img_size, cfg.img_size), c(cfg.in_channels, cfg.img_size, cfg.img_size);
    for (auto& v : n.pixels) v = static_cast<float>(rng.uniform());
    for (auto& v : c.pixels) v = static_cast<float>(rng.uniform());
    noisy.push_back(std::move(n));
    clean.push_back(std::move(c));
  }
  std::vector<MaskPlan> plans;
  for (std::size_t b = 0; b < batch; ++b) plans.push_back(plan_mask(cfg.n_patches(), cfg.mask_ratio, mask_seed(seed, b)));
  const std::span<const MaskPlan> plan_span(plans);

  auto loss_value = [&]() {
    tensor::NoGradGuard no_grad;
    return forward_pretrain<double>(params, cfg, w, noisy, clean, plan_span).total.item();
  };

  params.zero_grad();
  forward_pretrain<double>(params, cfg, w, noisy, clean, plan_span).total.backward();

  GradcheckReport report;
  for (auto& e : params.entries()) {
    const std::vector<double> analytic = e.value.has_grad() ? std::vector<double>(e.value.grad().begin(), e.value.grad().end())
                                                           : std::vector<double>(e.value.numel(), 0.0);
    auto data = e.value.mutable_data();
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0, max_abs = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double orig = data[i];
      data[i] = orig + step;
      const double up = loss_value();
      data[i] = orig - step;
      const double down = loss_value();
      data[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double d = analytic[i] - numeric;
      diff2 += d * d;
      a2 += analytic[i] * analytic[i];
      n2 += numeric * numeric;
      max_abs = std::max(max_abs, std::abs(d));
    }
    const double denom = std::max(std::sqrt(a2), std::sqrt(n2));
    const bool zero = denom < kZeroGradNorm;
    GradcheckEntry entry{e.name, data.size(), zero ? 0.0 : std::sqrt(diff2) / denom, max_abs, std::sqrt(a2), zero};
    report.max_rel_error = std::max(report.max_rel_error, entry.rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace dmae::model
