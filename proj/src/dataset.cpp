#include "glrc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <unordered_set>

#include "glrc/error.hpp"

namespace glrc {

InteractionSet::InteractionSet(std::uint32_t user_count, std::uint32_t item_count,
                               std::vector<Interaction> edges)
    : user_count_(user_count), item_count_(item_count), edges_(std::move(edges)) {
  offsets_.assign(static_cast<std::size_t>(user_count_) + 1, 0);
  for (const auto& e : edges_) {
    if (e.user >= user_count_ || e.item >= item_count_) {
      throw InvalidInput("InteractionSet: index out of range");
    }
    offsets_[e.user + 1]++;
  }
  for (std::size_t u = 0; u < user_count_; ++u) {
    offsets_[u + 1] += offsets_[u];
  }
  adjacency_.resize(edges_.size());
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& e : edges_) {
    adjacency_[cursor[e.user]++] = e.item;
  }
  for (std::size_t u = 0; u < user_count_; ++u) {
    auto begin = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[u]);
    auto end = adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[u + 1]);
    std::sort(begin, end);
    if (std::adjacent_find(begin, end) != end) {
      throw InvalidInput("InteractionSet: duplicate (user, item) pair for user " + std::to_string(u));
    }
  }
}

std::span<const std::uint32_t> InteractionSet::items_of(std::uint32_t user) const {
  return {adjacency_.data() + offsets_[user], offsets_[user + 1] - offsets_[user]};
}

bool InteractionSet::contains(std::uint32_t user, std::uint32_t item) const {
  if (user >= user_count_) return false;
  const auto items = items_of(user);
  return std::binary_search(items.begin(), items.end(), item);
}

std::vector<std::size_t> InteractionSet::user_degrees() const {
  std::vector<std::size_t> deg(user_count_);
  for (std::uint32_t u = 0; u < user_count_; ++u) {
    deg[u] = offsets_[u + 1] - offsets_[u];
  }
  return deg;
}

std::vector<std::size_t> InteractionSet::item_degrees() const {
  std::vector<std::size_t> deg(item_count_, 0);
  for (const auto& e : edges_) deg[e.item]++;
  return deg;
}

std::uint32_t IdMap::get_or_add(const std::string& raw) {
  auto [it, inserted] = index_.try_emplace(raw, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(raw);
  return it->second;
}

std::uint32_t IdMap::find(const std::string& raw) const {
  const auto it = index_.find(raw);
  return it == index_.end() ? size() : it->second;
}

namespace {

struct ParsedLine {
  std::string user;
  std::string item;
};

// Empty/whitespace-only lines yield false.
bool parse_line(std::string line, std::size_t lineno, const std::filesystem::path& path,
                ParsedLine& out) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line.find_first_not_of(" \t") == std::string::npos) return false;
  const auto tab = line.find('\t');
  if (tab == std::string::npos) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected user<TAB>item");
  }
  const auto tab2 = line.find('\t', tab + 1);
  out.user = line.substr(0, tab);
  out.item = line.substr(tab + 1, tab2 == std::string::npos ? std::string::npos : tab2 - tab - 1);
  if (out.user.empty() || out.item.empty()) {
    throw DataError(path.string() + ":" + std::to_string(lineno) + ": empty user or item field");
  }
  return true;
}

template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open " + path.string());
  }
  std::string line;
  std::size_t lineno = 0;
  ParsedLine parsed;
  while (std::getline(in, line)) {
    ++lineno;
    if (parse_line(std::move(line), lineno, path, parsed)) fn(parsed, lineno);
  }
}

std::uint64_t pair_key(const Interaction& e) {
  return (static_cast<std::uint64_t>(e.user) << 32) | e.item;
}

// Removes repeated pairs, keeping first occurrences in order; returns how many were dropped.
std::size_t dedup_keep_first(std::vector<Interaction>& edges) {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size());
  const auto before = edges.size();
  std::erase_if(edges, [&](const Interaction& e) { return !seen.insert(pair_key(e)).second; });
  return before - edges.size();
}

}  // namespace

RawInteractions load_tsv(const std::filesystem::path& path) {
  RawInteractions raw;
  for_each_line(path, [&](const ParsedLine& p, std::size_t) {
    raw.edges.push_back({raw.users.get_or_add(p.user), raw.items.get_or_add(p.item)});
  });
  if (raw.edges.empty()) {
    throw DataError(path.string() + ": no interactions");
  }
  raw.duplicates = dedup_keep_first(raw.edges);
  return raw;
}

SplitDataset build_splits(const RawInteractions& raw, SplitRatios ratios, Rng& rng) {
  if (raw.edges.empty()) {
    throw DataError("build_splits: empty edge set");
  }
  const double total = ratios.train + ratios.valid + ratios.test;
  if (ratios.train < 0 || ratios.valid < 0 || ratios.test < 0 || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("build_splits: ratios must be non-negative and sum to 1");
  }
  const std::uint32_t users = raw.users.size();
  const std::uint32_t items = raw.items.size();

  std::vector<std::size_t> degree(users, 0);
  for (const auto& e : raw.edges) degree[e.user]++;

  enum : std::uint8_t { kTrain, kValid, kTest };
  std::vector<std::uint8_t> bucket(raw.edges.size(), kTrain);
  for (std::size_t i = 0; i < raw.edges.size(); ++i) {
    const double r = rng.uniform();
    if (degree[raw.edges[i].user] < 3) continue;
    bucket[i] = r < ratios.train ? kTrain : (r < ratios.train + ratios.valid ? kValid : kTest);
  }
  // Guarantee one train interaction per user (first edge in file order).
  std::vector<bool> has_train(users, false);
  for (std::size_t i = 0; i < raw.edges.size(); ++i) {
    if (bucket[i] == kTrain) has_train[raw.edges[i].user] = true;
  }
  for (std::size_t i = 0; i < raw.edges.size(); ++i) {
    const auto u = raw.edges[i].user;
    if (!has_train[u]) {
      bucket[i] = kTrain;
      has_train[u] = true;
    }
  }

  std::vector<Interaction> parts[3];
  for (std::size_t i = 0; i < raw.edges.size(); ++i) parts[bucket[i]].push_back(raw.edges[i]);
  return SplitDataset{InteractionSet(users, items, std::move(parts[kTrain])),
                      InteractionSet(users, items, std::move(parts[kValid])),
                      InteractionSet(users, items, std::move(parts[kTest])), raw.users, raw.items};
}

namespace {

IdMap read_id_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  IdMap map;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (map.find(line) != map.size()) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": duplicate id '" + line + "'");
    }
    map.get_or_add(line);
  }
  return map;
}

}  // namespace

SplitDataset load_split_dir(const std::filesystem::path& dir) {
  const auto users_file = dir / "users.txt";
  const auto items_file = dir / "items.txt";
  const bool fixed_ids = std::filesystem::exists(users_file) && std::filesystem::exists(items_file);
  IdMap users = fixed_ids ? read_id_file(users_file) : IdMap{};
  IdMap items = fixed_ids ? read_id_file(items_file) : IdMap{};

  auto read_part = [&](const char* name) {
    const auto path = dir / name;
    std::vector<Interaction> edges;
    for_each_line(path, [&](const ParsedLine& p, std::size_t lineno) {
      std::uint32_t u, i;
      if (fixed_ids) {
        u = users.find(p.user);
        i = items.find(p.item);
        if (u == users.size() || i == items.size()) {
          throw DataError(path.string() + ":" + std::to_string(lineno) + ": id not in id map");
        }
      } else {
        u = users.get_or_add(p.user);
        i = items.get_or_add(p.item);
      }
      edges.push_back({u, i});
    });
    dedup_keep_first(edges);
    return edges;
  };
  auto train = read_part("train.tsv");
  auto valid = read_part("valid.tsv");
  auto test = read_part("test.tsv");
  if (train.empty()) {
    throw DataError((dir / "train.tsv").string() + ": no interactions");
  }
  const auto nu = users.size();
  const auto ni = items.size();
  return SplitDataset{InteractionSet(nu, ni, std::move(train)), InteractionSet(nu, ni, std::move(valid)),
                      InteractionSet(nu, ni, std::move(test)), std::move(users), std::move(items)};
}

void save_split_dir(const SplitDataset& split, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write_part = [&](const char* name, const InteractionSet& set) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    for (const auto& e : set.edges()) {
      out << split.users.name(e.user) << '\t' << split.items.name(e.item) << '\n';
    }
  };
  write_part("train.tsv", split.train);
  write_part("valid.tsv", split.valid);
  write_part("test.tsv", split.test);
  auto write_ids = [&](const char* name, const IdMap& map) {
    std::ofstream out(dir / name);
    if (!out) throw DataError("cannot write " + (dir / name).string());
    for (std::uint32_t i = 0; i < map.size(); ++i) out << map.name(i) << '\n';
  };
  write_ids("users.txt", split.users);
  write_ids("items.txt", split.items);
}

std::vector<BprTriplet> sample_bpr(const InteractionSet& train, std::size_t batch_size, Rng& rng,
                                   SamplerStats* stats) {
  if (train.empty()) {
    throw InvalidInput("sample_bpr: empty train set");
  }
  constexpr int kMaxRejections = 100;
  const auto edges = train.edges();
  std::vector<BprTriplet> out;
  out.reserve(batch_size);
  std::size_t consecutive_failures = 0;
  while (out.size() < batch_size) {
    const auto& e = edges[rng.below(edges.size())];
    bool found = false;
    for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
      const auto k = static_cast<std::uint32_t>(rng.below(train.item_count()));
      if (!train.contains(e.user, k)) {
        out.push_back({e.user, e.item, k});
        found = true;
        break;
      }
    }
    if (found) {
      consecutive_failures = 0;
      continue;
    }
    if (stats) stats->saturated_resamples++;
    if (++consecutive_failures > 10000) {
      throw DataError("sample_bpr: no user has a non-interacted item");
    }
  }
  return out;
}

std::vector<KdTriplet> sample_t1(std::uint32_t user_count, std::uint32_t item_count, std::size_t n,
                                 Rng& rng) {
  if (user_count == 0 || item_count == 0) {
    throw InvalidInput("sample_t1: empty user or item set");
  }
  std::vector<KdTriplet> out(n);
  for (auto& t : out) {
    t.user = static_cast<std::uint32_t>(rng.below(user_count));
    t.first = static_cast<std::uint32_t>(rng.below(item_count));
    t.second = static_cast<std::uint32_t>(rng.below(item_count));
  }
  return out;
}

std::vector<Interaction> sample_t2(const InteractionSet& train, std::size_t n, Rng& rng) {
  if (train.empty()) {
    throw InvalidInput("sample_t2: empty train set");
  }
  const auto edges = train.edges();
  std::vector<Interaction> out(n);
  for (auto& p : out) p = edges[rng.below(edges.size())];
  return out;
}

}  // namespace glrc
