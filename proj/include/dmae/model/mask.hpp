#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace dmae::model {

struct MaskPlan {
  std::size_t n_patches = 0;
  std::vector<std::size_t> visible_ids;  // ascending
  std::vector<std::size_t> masked_ids;   // ascending
  std::vector<std::size_t> position_labels;  // one per visible_ids entry
};

// Uniformly random visible subset of size round(n * (1 - mask_ratio)),
// chosen by ranking n i.i.d. uniform draws (lowest ranks visible).
MaskPlan plan_mask(std::size_t n_patches, double mask_ratio, std::uint64_t seed);

// Rank of each visible patch's spatial index among the visible set:
// label k for the k-th visible patch in ascending spatial order.
std::vector<std::size_t> position_labels(const MaskPlan& plan);

// Labels for visible patches presented in an arbitrary order. Each entry of
// `order` must be a visible spatial index.
std::vector<std::size_t> position_labels_for(const MaskPlan& plan, std::span<const std::size_t> order);

}  // namespace dmae::model
