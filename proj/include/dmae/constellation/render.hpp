#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "dmae/image.hpp"
#include "dmae/sigsynth/sigsynth.hpp"

namespace dmae::constellation {

struct RenderConfig {
  double plane_extent = 7.0;  // the complex plane spans [-extent/2, extent/2]^2
  std::size_t image_size = 224;
  std::array<double, 3> alphas = {0.6, 1.2, 2.4};  // decay per pixel of distance
  double neighborhood_radius = 6.0;                // pixels
  bool require_distinct_alphas = true;

  void validate() const;
};

enum class Variant { noisy, clean };

struct ConstellationImage {
  Image image;
  Variant variant = Variant::clean;
  sigsynth::Scheme scheme = sigsynth::Scheme::ask4;
  std::optional<double> snr_db;
};

// Position of a complex sample on the pixel grid: column and row
// coordinates where integer values are pixel centroids. Samples outside the
// plane are clipped to its boundary.
struct GridPoint {
  double col;
  double row;
};
GridPoint to_grid(sigsynth::Sample s, const RenderConfig& cfg);

// Enhanced grayscale rasterization:
//   B[i][j] = sum_k P_k * exp(-alpha * d(i, j, k))  over samples within the radius,
// with P_k = |s_k|^2, then scaled so the maximum is 1. Row-major S x S.
std::vector<double> enhanced_gray(std::span<const sigsynth::Sample> samples, const RenderConfig& cfg, double alpha);

// Same accumulation with caller-supplied weights in place of |s_k|^2.
std::vector<double> enhanced_gray_weighted(std::span<const sigsynth::Sample> samples, std::span<const double> weights,
                                           const RenderConfig& cfg, double alpha);

// Three enhanced grayscale channels, one per decay rate.
Image to_rgb(std::span<const sigsynth::Sample> samples, const RenderConfig& cfg);

// Signal-image modality: real part reshaped to 32 x 32, bilinearly
// interpolated (corner-aligned) to image_size, min-max scaled, replicated
// to three channels. Requires exactly 1024 samples.
Image signal_to_image(const sigsynth::IQSignal& signal, std::size_t image_size);

// Corner-aligned bilinear resize of a row-major grid.
std::vector<double> bilinear_resize(std::span<const double> src, std::size_t src_h, std::size_t src_w,
                                    std::size_t dst_h, std::size_t dst_w);

struct PairConfig {
  RenderConfig render;
  sigsynth::SynthConfig synth;
  std::size_t signal_length = 1024;
};

struct ImagePair {
  ConstellationImage noisy;
  ConstellationImage clean;
  std::size_t label = 0;
};

// Clean and noisy renders of one underlying symbol sequence.
ImagePair make_pair(sigsynth::Scheme scheme, double snr_db, std::uint64_t seed, const PairConfig& cfg);

// Seeds used by make_pair for the clean waveform and the noise draw.
std::uint64_t signal_seed(std::uint64_t pair_seed);
std::uint64_t noise_seed(std::uint64_t pair_seed);

}  // namespace dmae::constellation
