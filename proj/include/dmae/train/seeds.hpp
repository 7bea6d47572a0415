#pragma once

// Independent RNG streams derived from one master seed:
//   stream seed = derive_seed(master, {stream id})
// Further words (epoch, sample index, step) are folded in with derive_seed.

#include <cstdint>
#include <initializer_list>
#include <vector>

namespace dmae::train {

enum class Stream : std::uint64_t {
  shuffle = 1,
  mask = 2,
  noise = 3,
  init = 4,
  dropout = 5,
};

class SeedStreams {
 public:
  explicit SeedStreams(std::uint64_t master) : master_(master) {}

  std::uint64_t master() const { return master_; }
  std::uint64_t stream(Stream id) const;
  std::uint64_t stream(Stream id, std::initializer_list<std::uint64_t> words) const;

 private:
  std::uint64_t master_;
};

SeedStreams set_global_seed(std::uint64_t master);

// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace dmae::train
