#include "dmae/model/mask.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "dmae/errors.hpp"
#include "dmae/model/config.hpp"
#include "dmae/rng.hpp"

namespace dmae::model {

MaskPlan plan_mask(std::size_t n_patches, double mask_ratio, std::uint64_t seed) {
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw ConfigError("plan_mask: mask_ratio must lie in (0, 1)");
  const std::size_t n_vis = visible_count(n_patches, mask_ratio);
  if (n_vis == 0 || n_vis >= n_patches) {
    throw ConfigError("plan_mask: " + std::to_string(n_vis) + " visible of " + std::to_string(n_patches) +
                      " patches; need at least one visible and one masked");
  }
  Rng rng(seed);
  std::vector<double> noise(n_patches);
  for (auto& u : noise) u = rng.uniform();
  std::vector<std::size_t> order(n_patches);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return noise[a] < noise[b]; });

  MaskPlan plan;
  plan.n_patches = n_patches;
  plan.visible_ids.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_vis));
  plan.masked_ids.assign(order.begin() + static_cast<std::ptrdiff_t>(n_vis), order.end());
  std::sort(plan.visible_ids.begin(), plan.visible_ids.end());
  std::sort(plan.masked_ids.begin(), plan.masked_ids.end());
  plan.position_labels = position_labels(plan);
  return plan;
}

std::vector<std::size_t> position_labels(const MaskPlan& plan) {
  std::vector<std::size_t> labels(plan.visible_ids.size());
  std::iota(labels.begin(), labels.end(), std::size_t{0});
  return labels;
}

std::vector<std::size_t> position_labels_for(const MaskPlan& plan, std::span<const std::size_t> order) {
  std::vector<std::size_t> labels;
  labels.reserve(order.size());
  for (std::size_t id : order) {
    auto it = std::lower_bound(plan.visible_ids.begin(), plan.visible_ids.end(), id);
    if (it == plan.visible_ids.end() || *it != id) {
      throw IndexError("position_labels_for: patch " + std::to_string(id) + " is not visible");
    }
    labels.push_back(static_cast<std::size_t>(it - plan.visible_ids.begin()));
  }
  return labels;
}

}  // namespace dmae::model
