#include "dmae/eval/metrics.hpp"

#include <cmath>
#include <string>

#include "dmae/errors.hpp"

namespace dmae::eval {

namespace {

void check_same(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) throw DimensionError(std::string(what) + ": images differ in shape");
}

// Valid-mode separable correlation of one H x W plane.
std::vector<double> filter_valid(const std::vector<double>& src, std::size_t h, std::size_t w,
                                 const std::vector<double>& taps) {
  const std::size_t k = taps.size();
  const std::size_t oh = h - k + 1;
  const std::size_t ow = w - k + 1;
  std::vector<double> tmp(h * ow, 0.0);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += taps[t] * src[y * w + x + t];
      tmp[y * ow + x] = s;
    }
  std::vector<double> out(oh * ow, 0.0);
  for (std::size_t y = 0; y < oh; ++y)
    for (std::size_t x = 0; x < ow; ++x) {
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += taps[t] * tmp[(y + t) * ow + x];
      out[y * ow + x] = s;
    }
  return out;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  check_same(a, b, "mse");
  if (a.pixels.empty()) throw DimensionError("mse: empty images");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]);
    acc += d * d;
  }
  return acc / static_cast<double>(a.pixels.size());
}

Psnr psnr(const Image& a, const Image& b, double max_val) {
  const double m = mse(a, b);
  if (m == 0.0) return {kPsnrCap, true};
  return {std::min(kPsnrCap, 10.0 * std::log10(max_val * max_val / m)), false};
}

std::vector<double> gaussian_taps(std::size_t size, double sigma) {
  std::vector<double> taps(size);
  const double c = (static_cast<double>(size) - 1.0) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < size; ++i) {
    const double d = static_cast<double>(i) - c;
    taps[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    total += taps[i];
  }
  for (auto& t : taps) t /= total;
  return taps;
}

double ssim(const Image& a, const Image& b, const SsimConfig& cfg) {
  check_same(a, b, "ssim");
  const std::size_t h = a.height;
  const std::size_t w = a.width;
  if (h < cfg.window || w < cfg.window || a.channels == 0) {
    throw ConfigError("ssim: images " + std::to_string(h) + "x" + std::to_string(w) + " smaller than the " +
                      std::to_string(cfg.window) + "x" + std::to_string(cfg.window) + " window");
  }
  const auto taps = gaussian_taps(cfg.window, cfg.sigma);
  const double c1 = (cfg.k1 * cfg.dynamic_range) * (cfg.k1 * cfg.dynamic_range);
  const double c2 = (cfg.k2 * cfg.dynamic_range) * (cfg.k2 * cfg.dynamic_range);
  const std::size_t plane = h * w;

  double total = 0.0;
  for (std::size_t c = 0; c < a.channels; ++c) {
    std::vector<double> x(plane), y(plane), xx(plane), yy(plane), xy(plane);
    for (std::size_t i = 0; i < plane; ++i) {
      x[i] = a.pixels[c * plane + i];
      y[i] = b.pixels[c * plane + i];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, h, w, taps);
    const auto my = filter_valid(y, h, w, taps);
    const auto sxx = filter_valid(xx, h, w, taps);
    const auto syy = filter_valid(yy, h, w, taps);
    const auto sxy = filter_valid(xy, h, w, taps);
    double acc = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      acc += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
             ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += acc / static_cast<double>(mx.size());
  }
  return total / static_cast<double>(a.channels);
}

}  // namespace dmae::eval
