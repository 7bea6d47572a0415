#include "dmae/train/seeds.hpp"

#include <numeric>
#include <utility>

#include "dmae/rng.hpp"

namespace dmae::train {

std::uint64_t SeedStreams::stream(Stream id) const { return derive_seed(master_, {static_cast<std::uint64_t>(id)}); }

std::uint64_t SeedStreams::stream(Stream id, std::initializer_list<std::uint64_t> words) const {
  return derive_seed(stream(id), words);
}

SeedStreams set_global_seed(std::uint64_t master) { return SeedStreams(master); }

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

}  // namespace dmae::train
