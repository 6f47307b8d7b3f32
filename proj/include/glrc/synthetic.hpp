#pragma once

#include <cstdint>

#include "glrc/dataset.hpp"
#include "glrc/rng.hpp"

namespace glrc {

/// Community-structured implicit feedback: users and items are split into
/// `communities` equal blocks; each interaction lands in the user's own
/// block with probability `in_block`, otherwise uniformly over all items.
struct BlocksSpec {
  std::uint32_t users = 200;
  std::uint32_t items = 100;
  std::uint32_t communities = 4;
  std::uint32_t per_user = 15;
  double in_block = 0.9;
};

RawInteractions blocks_dataset(const BlocksSpec& spec, Rng& rng);

/// Uniform random bipartite graph with exactly `edges` distinct pairs.
RawInteractions random_bipartite(std::uint32_t users, std::uint32_t items, std::size_t edges, Rng& rng);

}  // namespace glrc
