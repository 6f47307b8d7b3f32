#include "glrc/synthetic.hpp"

#include <string>
#include <unordered_set>

#include "glrc/error.hpp"

namespace glrc {
namespace {

void name_ids(RawInteractions& raw, std::uint32_t users, std::uint32_t items) {
  for (std::uint32_t u = 0; u < users; ++u) raw.users.get_or_add("u" + std::to_string(u));
  for (std::uint32_t i = 0; i < items; ++i) raw.items.get_or_add("i" + std::to_string(i));
}

}  // namespace

RawInteractions blocks_dataset(const BlocksSpec& spec, Rng& rng) {
  if (spec.communities == 0 || spec.items % spec.communities != 0 || spec.users % spec.communities != 0) {
    throw InvalidInput("blocks_dataset: users and items must divide evenly into communities");
  }
  const std::uint32_t block = spec.items / spec.communities;
  if (spec.per_user > spec.items) throw InvalidInput("blocks_dataset: per_user exceeds catalog");

  RawInteractions raw;
  name_ids(raw, spec.users, spec.items);
  const std::uint32_t users_per_block = spec.users / spec.communities;
  for (std::uint32_t u = 0; u < spec.users; ++u) {
    const std::uint32_t community = u / users_per_block;
    std::unordered_set<std::uint32_t> chosen;
    while (chosen.size() < spec.per_user) {
      std::uint32_t item;
      if (rng.uniform() < spec.in_block) {
        item = community * block + static_cast<std::uint32_t>(rng.below(block));
      } else {
        item = static_cast<std::uint32_t>(rng.below(spec.items));
      }
      if (chosen.insert(item).second) raw.edges.push_back({u, item});
    }
  }
  return raw;
}

RawInteractions random_bipartite(std::uint32_t users, std::uint32_t items, std::size_t edges, Rng& rng) {
  if (edges > static_cast<std::size_t>(users) * items) {
    throw InvalidInput("random_bipartite: more edges than pairs");
  }
  RawInteractions raw;
  name_ids(raw, users, items);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges);
  while (raw.edges.size() < edges) {
    const auto u = static_cast<std::uint32_t>(rng.below(users));
    const auto i = static_cast<std::uint32_t>(rng.below(items));
    if (seen.insert((static_cast<std::uint64_t>(u) << 32) | i).second) raw.edges.push_back({u, i});
  }
  return raw;
}

}  // namespace glrc
