#include "dmae/constellation/render.hpp"

#include <algorithm>
#include <cmath>

#include "dmae/errors.hpp"
#include "dmae/rng.hpp"

namespace dmae::constellation {

using sigsynth::Sample;

void RenderConfig::validate() const {
  if (!(plane_extent > 0.0)) throw ConfigError("render: plane_extent must be positive");
  if (image_size < 2) throw ConfigError("render: image_size must be >= 2");
  if (!(neighborhood_radius >= 0.0)) throw ConfigError("render: neighborhood_radius must be >= 0");
  for (double a : alphas) {
    if (!(a > 0.0)) throw ConfigError("render: decay rates must be strictly positive");
  }
  if (require_distinct_alphas &&
      (alphas[0] == alphas[1] || alphas[0] == alphas[2] || alphas[1] == alphas[2])) {
    throw ConfigError("render: decay rates must be pairwise distinct");
  }
}

GridPoint to_grid(Sample s, const RenderConfig& cfg) {
  const double half = cfg.plane_extent / 2.0;
  const double re = std::clamp(s.real(), -half, half);
  const double im = std::clamp(s.imag(), -half, half);
  const double size = static_cast<double>(cfg.image_size);
  return {(re + half) / cfg.plane_extent * size - 0.5, (half - im) / cfg.plane_extent * size - 0.5};
}

std::vector<double> enhanced_gray_weighted(std::span<const Sample> samples, std::span<const double> weights,
                                           const RenderConfig& cfg, double alpha) {
  if (!(alpha > 0.0)) throw ConfigError("enhanced_gray: alpha must be positive");
  if (weights.size() != samples.size()) throw DimensionError("enhanced_gray: one weight per sample required");
  const std::size_t n = cfg.image_size;
  std::vector<double> grid(n * n, 0.0);
  const double r = cfg.neighborhood_radius;
  const double r2 = r * r;
  const auto last = static_cast<double>(n - 1);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const GridPoint p = to_grid(samples[k], cfg);
    const auto row_lo = static_cast<std::size_t>(std::max(0.0, std::ceil(p.row - r)));
    const auto row_hi = static_cast<std::size_t>(std::min(last, std::floor(p.row + r)));
    const auto col_lo = static_cast<std::size_t>(std::max(0.0, std::ceil(p.col - r)));
    const auto col_hi = static_cast<std::size_t>(std::min(last, std::floor(p.col + r)));
    for (std::size_t i = row_lo; i <= row_hi; ++i) {
      const double dy = static_cast<double>(i) - p.row;
      for (std::size_t j = col_lo; j <= col_hi; ++j) {
        const double dx = static_cast<double>(j) - p.col;
        const double d2 = dx * dx + dy * dy;
        if (d2 > r2) continue;
        grid[i * n + j] += weights[k] * std::exp(-alpha * std::sqrt(d2));
      }
    }
  }
  const double mx = *std::max_element(grid.begin(), grid.end());
  if (mx > 0.0) {
    for (auto& v : grid) v /= mx;
  }
  return grid;
}

std::vector<double> enhanced_gray(std::span<const Sample> samples, const RenderConfig& cfg, double alpha) {
  std::vector<double> power(samples.size());
  for (std::size_t k = 0; k < samples.size(); ++k) power[k] = std::norm(samples[k]);
  return enhanced_gray_weighted(samples, power, cfg, alpha);
}

Image to_rgb(std::span<const Sample> samples, const RenderConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.image_size;
  Image img(3, n, n);
  for (std::size_t c = 0; c < 3; ++c) {
    const auto gray = enhanced_gray(samples, cfg, cfg.alphas[c]);
    std::transform(gray.begin(), gray.end(), img.pixels.begin() + static_cast<std::ptrdiff_t>(c * n * n),
                   [](double v) { return static_cast<float>(v); });
  }
  return img;
}

std::vector<double> bilinear_resize(std::span<const double> src, std::size_t src_h, std::size_t src_w,
                                    std::size_t dst_h, std::size_t dst_w) {
  if (src.size() != src_h * src_w) throw DimensionError("bilinear_resize: source size mismatch");
  if (src_h < 2 || src_w < 2 || dst_h < 2 || dst_w < 2) throw ConfigError("bilinear_resize: dims must be >= 2");
  std::vector<double> out(dst_h * dst_w);
  for (std::size_t i = 0; i < dst_h; ++i) {
    const double y = static_cast<double>(i * (src_h - 1)) / static_cast<double>(dst_h - 1);
    const auto y0 = std::min(static_cast<std::size_t>(y), src_h - 2);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t j = 0; j < dst_w; ++j) {
      const double x = static_cast<double>(j * (src_w - 1)) / static_cast<double>(dst_w - 1);
      const auto x0 = std::min(static_cast<std::size_t>(x), src_w - 2);
      const double fx = x - static_cast<double>(x0);
      const double a = src[y0 * src_w + x0];
      const double b = src[y0 * src_w + x0 + 1];
      const double c = src[(y0 + 1) * src_w + x0];
      const double d = src[(y0 + 1) * src_w + x0 + 1];
      const double top = (1.0 - fx) * a + fx * b;
      const double bottom = (1.0 - fx) * c + fx * d;
      out[i * dst_w + j] = (1.0 - fy) * top + fy * bottom;
    }
  }
  return out;
}

Image signal_to_image(const sigsynth::IQSignal& signal, std::size_t image_size) {
  constexpr std::size_t kSide = 32;
  if (signal.samples.size() != kSide * kSide) {
    throw ConfigError("signal_to_image: expected 1024 samples, got " + std::to_string(signal.samples.size()) +
                      " (resample first)");
  }
  std::vector<double> s1(kSide * kSide);
  for (std::size_t i = 0; i < s1.size(); ++i) s1[i] = signal.samples[i].real();
  auto s2 = bilinear_resize(s1, kSide, kSide, image_size, image_size);
  const auto [mn_it, mx_it] = std::minmax_element(s2.begin(), s2.end());
  const double mn = *mn_it;
  const double range = *mx_it - mn;
  Image img(3, image_size, image_size);
  const std::size_t plane = image_size * image_size;
  for (std::size_t i = 0; i < plane; ++i) {
    const auto v = static_cast<float>(range > 0.0 ? (s2[i] - mn) / range : 0.0);
    for (std::size_t c = 0; c < 3; ++c) img.pixels[c * plane + i] = v;
  }
  return img;
}

std::uint64_t signal_seed(std::uint64_t pair_seed) { return derive_seed(pair_seed, {0x5167ULL}); }
std::uint64_t noise_seed(std::uint64_t pair_seed) { return derive_seed(pair_seed, {0x4E01ULL}); }

ImagePair make_pair(sigsynth::Scheme scheme, double snr_db, std::uint64_t seed, const PairConfig& cfg) {
  cfg.render.validate();
  const auto clean_sig = sigsynth::gen_clean(scheme, cfg.signal_length, signal_seed(seed), cfg.synth);
  const auto noisy_sig = sigsynth::add_awgn(clean_sig, snr_db, noise_seed(seed));
  ImagePair pair;
  pair.label = sigsynth::class_index(scheme);
  pair.clean = {to_rgb(clean_sig.samples, cfg.render), Variant::clean, scheme, std::nullopt};
  pair.noisy = {to_rgb(noisy_sig.samples, cfg.render), Variant::noisy, scheme, snr_db};
  return pair;
}

}  // namespace dmae::constellation
