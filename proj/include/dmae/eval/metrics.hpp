#pragma once

#include <vector>

#include "dmae/image.hpp"

namespace dmae::eval {

inline constexpr double kPsnrCap = 100.0;

struct Psnr {
  double db = 0.0;
  bool identical = false;  // MSE was zero; db holds the cap
};

double mse(const Image& a, const Image& b);

// 10 log10(max^2 / MSE), capped at 100 dB for identical inputs.
Psnr psnr(const Image& a, const Image& b, double max_val = 1.0);

struct SsimConfig {
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
std::vector<double> gaussian_taps(std::size_t size, double sigma);

// Gaussian-windowed SSIM averaged over every fully contained window of each
// channel, then over channels. Window statistics use the window weights
// directly (population moments).
double ssim(const Image& a, const Image& b, const SsimConfig& cfg = {});

}  // namespace dmae::eval
