#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "glrc/rng.hpp"

namespace glrc {

struct Interaction {
  std::uint32_t user;
  std::uint32_t item;
  friend bool operator==(const Interaction&, const Interaction&) = default;
};

/// Users occupy embedding rows [0, users), items [users, users + items).
struct NodeLayout {
  std::uint32_t users = 0;
  std::uint32_t items = 0;

  std::uint32_t total() const { return users + items; }
  std::uint32_t user_row(std::uint32_t u) const { return u; }
  std::uint32_t item_row(std::uint32_t i) const { return users + i; }
  bool is_user_row(std::uint32_t row) const { return row < users; }
};

/// Immutable set of observed (user, item) pairs with a per-user sorted item
/// adjacency for O(log) membership tests.
class InteractionSet {
 public:
  InteractionSet() = default;
  /// Throws InvalidInput on out-of-range indices or duplicate pairs.
  InteractionSet(std::uint32_t user_count, std::uint32_t item_count, std::vector<Interaction> edges);

  std::uint32_t user_count() const { return user_count_; }
  std::uint32_t item_count() const { return item_count_; }
  std::uint32_t node_count() const { return user_count_ + item_count_; }
  NodeLayout layout() const { return {user_count_, item_count_}; }
  std::size_t size() const { return edges_.size(); }
  bool empty() const { return edges_.empty(); }

  std::span<const Interaction> edges() const { return edges_; }
  std::span<const std::uint32_t> items_of(std::uint32_t user) const;
  bool contains(std::uint32_t user, std::uint32_t item) const;

  std::vector<std::size_t> user_degrees() const;
  std::vector<std::size_t> item_degrees() const;

 private:
  std::uint32_t user_count_ = 0;
  std::uint32_t item_count_ = 0;
  std::vector<Interaction> edges_;
  std::vector<std::size_t> offsets_{0};
  std::vector<std::uint32_t> adjacency_;
};

/// Raw id <-> dense index table; indices are assigned in first-appearance order.
class IdMap {
 public:
  std::uint32_t get_or_add(const std::string& raw);
  /// Returns size() when absent.
  std::uint32_t find(const std::string& raw) const;
  const std::string& name(std::uint32_t index) const { return names_[index]; }
  std::uint32_t size() const { return static_cast<std::uint32_t>(names_.size()); }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

struct RawInteractions {
  std::vector<Interaction> edges;
  IdMap users;
  IdMap items;
  std::size_t duplicates = 0;
};

/// Reads `user<TAB>item[<TAB>ignored...]` lines. Throws DataError with the
/// line number on malformed input, and on a file with no interactions.
RawInteractions load_tsv(const std::filesystem::path& path);

struct SplitRatios {
  double train = 0.70;
  double valid = 0.05;
  double test = 0.25;
};

struct SplitDataset {
  InteractionSet train;
  InteractionSet valid;
  InteractionSet test;
  IdMap users;
  IdMap items;
};

/// Per-interaction random split. Users with fewer than 3 interactions stay
/// entirely in train; every other user keeps at least one train interaction.
SplitDataset build_splits(const RawInteractions& raw, SplitRatios ratios, Rng& rng);

/// Directory layout: train.tsv, valid.tsv, test.tsv and optionally
/// users.txt / items.txt (one raw id per line, line number = dense index).
/// Without the id files, indices follow first appearance over
/// train, valid, test in that order.
SplitDataset load_split_dir(const std::filesystem::path& dir);
void save_split_dir(const SplitDataset& split, const std::filesystem::path& dir);

struct BprTriplet {
  std::uint32_t user;
  std::uint32_t positive;
  std::uint32_t negative;
};

struct KdTriplet {
  std::uint32_t user;
  std::uint32_t first;
  std::uint32_t second;
};

struct SamplerStats {
  std::size_t saturated_resamples = 0;
};

/// Positives uniform over train edges; negatives by rejection. A positive
/// whose user needs more than 100 rejections is redrawn and counted in stats.
std::vector<BprTriplet> sample_bpr(const InteractionSet& train, std::size_t batch_size, Rng& rng,
                                   SamplerStats* stats = nullptr);

/// Uniform (user, item, item) triplets over the whole catalog.
std::vector<KdTriplet> sample_t1(std::uint32_t user_count, std::uint32_t item_count, std::size_t n,
                                 Rng& rng);

/// n observed pairs drawn uniformly with replacement.
std::vector<Interaction> sample_t2(const InteractionSet& train, std::size_t n, Rng& rng);

}  // namespace glrc
