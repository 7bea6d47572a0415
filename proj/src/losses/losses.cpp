#include "dmae/losses/losses.hpp"

#include <cmath>
#include <string>

#include "dmae/errors.hpp"
#include "dmae/tensor/ops.hpp"

namespace dmae::losses {

using tensor::Node;
using tensor::Tensor;

void LossWeights::validate() const {
  if (!(lambda_rec >= 0.0) || !(lambda_cls >= 0.0)) throw ConfigError("loss weights must be non-negative");
  if (lambda_rec == 0.0 && lambda_cls == 0.0) throw ConfigError("lambda_rec and lambda_cls cannot both be zero");
}

namespace {

template <class T>
PatchStats stats_of(std::span<const T> x, double eps) {
  double mean = 0.0;
  for (T v : x) mean += static_cast<double>(v);
  mean /= static_cast<double>(x.size());
  double var = 0.0;
  for (T v : x) {
    const double d = static_cast<double>(v) - mean;
    var += d * d;
  }
  var /= static_cast<double>(x.size());
  return {mean, std::sqrt(var + eps)};
}

}  // namespace

PatchStats patch_stats(std::span<const float> patch, double eps) { return stats_of(patch, eps); }

template <class T>
std::vector<T> norm_pix(std::span<const T> patch, double eps) {
  const auto s = stats_of(patch, eps);
  std::vector<T> out(patch.size());
  for (std::size_t i = 0; i < patch.size(); ++i) out[i] = static_cast<T>((static_cast<double>(patch[i]) - s.mean) / s.std);
  return out;
}

template <class T>
std::vector<T> norm_pix_rows(std::span<const T> rows, std::size_t row_width, double eps) {
  if (row_width == 0 || rows.size() % row_width != 0) throw DimensionError("norm_pix_rows: ragged rows");
  std::vector<T> out(rows.size());
  for (std::size_t r = 0; r < rows.size() / row_width; ++r) {
    auto n = norm_pix<T>(rows.subspan(r * row_width, row_width), eps);
    std::copy(n.begin(), n.end(), out.begin() + static_cast<std::ptrdiff_t>(r * row_width));
  }
  return out;
}

void denorm_pix(std::span<float> patch, const PatchStats& stats) {
  for (auto& v : patch) v = static_cast<float>(static_cast<double>(v) * stats.std + stats.mean);
}

template <class T>
Tensor<T> rec_loss(const Tensor<T>& reconstruction, const Tensor<T>& clean_target,
                   std::span<const std::size_t> masked_rows) {
  if (reconstruction.shape() != clean_target.shape() || reconstruction.rank() != 2) {
    throw DimensionError("rec_loss: reconstruction " + tensor::shape_str(reconstruction.shape()) + " vs target " +
                         tensor::shape_str(clean_target.shape()));
  }
  if (masked_rows.empty()) throw ConfigError("rec_loss: empty masked set");
  const std::size_t rows = reconstruction.dim(0);
  const std::size_t width = reconstruction.dim(1);
  for (std::size_t r : masked_rows) {
    if (r >= rows) throw IndexError("rec_loss: row " + std::to_string(r) + " out of range");
  }

  // Normalized targets for the masked rows only.
  std::vector<std::size_t> ids(masked_rows.begin(), masked_rows.end());
  std::vector<T> diff(ids.size() * width);
  const auto rec = reconstruction.data();
  const auto tgt = clean_target.data();
  double acc = 0.0;
  for (std::size_t m = 0; m < ids.size(); ++m) {
    const auto target = norm_pix<T>(tgt.subspan(ids[m] * width, width));
    for (std::size_t j = 0; j < width; ++j) {
      const T d = rec[ids[m] * width + j] - target[j];
      diff[m * width + j] = d;
      acc += static_cast<double>(d) * static_cast<double>(d);
    }
  }
  const double count = static_cast<double>(ids.size() * width);
  return tensor::make_result<T>({}, {static_cast<T>(acc / count)}, {reconstruction},
                                [ids = std::move(ids), diff = std::move(diff), width, count](Node<T>& out) {
                                  auto& p = *out.parents[0];
                                  if (!p.requires_grad) return;
                                  auto& g = p.grad_buffer();
                                  const double s = 2.0 * static_cast<double>(out.grad[0]) / count;
                                  for (std::size_t m = 0; m < ids.size(); ++m)
                                    for (std::size_t j = 0; j < width; ++j)
                                      g[ids[m] * width + j] += static_cast<T>(s * static_cast<double>(diff[m * width + j]));
                                });
}

template <class T>
Tensor<T> cls_loss(const Tensor<T>& logits, std::span<const std::size_t> labels) {
  return tensor::softmax_cross_entropy(logits, labels);
}

template <class T>
Tensor<T> total_loss(const Tensor<T>& rec, const Tensor<T>& cls, const LossWeights& w) {
  return tensor::add(tensor::scale(rec, static_cast<T>(w.lambda_rec)), tensor::scale(cls, static_cast<T>(w.lambda_cls)));
}

double total_loss(double rec, double cls, const LossWeights& w) { return w.lambda_rec * rec + w.lambda_cls * cls; }

#define DMAE_INSTANTIATE_LOSSES(T)                                                                  \
  template std::vector<T> norm_pix<T>(std::span<const T>, double);                                  \
  template std::vector<T> norm_pix_rows<T>(std::span<const T>, std::size_t, double);                \
  template Tensor<T> rec_loss<T>(const Tensor<T>&, const Tensor<T>&, std::span<const std::size_t>); \
  template Tensor<T> cls_loss<T>(const Tensor<T>&, std::span<const std::size_t>);                   \
  template Tensor<T> total_loss<T>(const Tensor<T>&, const Tensor<T>&, const LossWeights&);

DMAE_INSTANTIATE_LOSSES(float)
DMAE_INSTANTIATE_LOSSES(double)

}  // namespace dmae::losses
