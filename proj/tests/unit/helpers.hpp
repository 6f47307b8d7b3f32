#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <vector>

#include "glrc/dataset.hpp"
#include "glrc/matrix.hpp"
#include "glrc/rng.hpp"
#include "glrc/synthetic.hpp"

namespace glrc::testing {

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(-scale, scale);
  return m;
}

/// Random bipartite graph, every user with at least one item, at most
/// `max_nodes` nodes in total.
inline InteractionSet random_graph(Rng& rng, std::uint32_t max_nodes, double density = 0.4) {
  const std::uint32_t users = 1 + static_cast<std::uint32_t>(rng.below(max_nodes / 2));
  const std::uint32_t items = 1 + static_cast<std::uint32_t>(rng.below(max_nodes - users));
  std::vector<Interaction> edges;
  for (std::uint32_t u = 0; u < users; ++u) {
    bool any = false;
    for (std::uint32_t i = 0; i < items; ++i) {
      if (rng.uniform() < density) {
        edges.push_back({u, i});
        any = true;
      }
    }
    if (!any) edges.push_back({u, static_cast<std::uint32_t>(rng.below(items))});
  }
  return InteractionSet(users, items, std::move(edges));
}

/// Independent dense symmetric-normalized adjacency with self-loops.
inline DenseMatrix dense_normalized(const InteractionSet& g) {
  const auto n = g.node_count();
  DenseMatrix a(n, n);
  for (std::uint32_t k = 0; k < n; ++k) a(k, k) = 1.0;
  for (const auto& e : g.edges()) {
    a(e.user, g.user_count() + e.item) = 1.0;
    a(g.user_count() + e.item, e.user) = 1.0;
  }
  std::vector<double> deg(n, 0.0);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < n; ++c) deg[r] += a(r, c);
  for (std::uint32_t r = 0; r < n; ++r)
    for (std::uint32_t c = 0; c < n; ++c) a(r, c) /= std::sqrt(deg[r] * deg[c]);
  return a;
}

/// Sum over walks of exactly `length` steps from `from` to every node, each
/// weighted by the product of its edge weights.
inline void walk_weights(const DenseMatrix& a, std::size_t from, std::size_t length, double weight,
                         std::vector<double>& out) {
  if (length == 0) {
    out[from] += weight;
    return;
  }
  for (std::size_t next = 0; next < a.cols(); ++next) {
    if (a(from, next) != 0.0) walk_weights(a, next, length - 1, weight * a(from, next), out);
  }
}

/// Central finite differences of f over every entry of x.
inline std::vector<double> numeric_gradient(std::span<double> x, const std::function<double()>& f,
                                            double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double keep = x[k];
    x[k] = keep + h;
    const double up = f();
    x[k] = keep - h;
    const double down = f();
    x[k] = keep;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

inline std::vector<KdTriplet> random_t1(NodeLayout layout, std::size_t n, Rng& rng) {
  std::vector<KdTriplet> t;
  for (std::size_t k = 0; k < n; ++k) {
    t.push_back({static_cast<std::uint32_t>(rng.below(layout.users)), static_cast<std::uint32_t>(rng.below(layout.items)),
                 static_cast<std::uint32_t>(rng.below(layout.items))});
  }
  return t;
}

inline std::vector<Interaction> random_pairs(const InteractionSet& g, std::size_t n, Rng& rng) {
  std::vector<Interaction> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back(g.edges()[rng.below(g.size())]);
  return out;
}

/// Independent draw per pair, skipping pairs already in `disjoint_from`.
inline InteractionSet random_set(std::uint32_t users, std::uint32_t items, double p, Rng& rng,
                          const std::vector<const InteractionSet*>& disjoint_from = {}) {
  std::vector<Interaction> edges;
  for (std::uint32_t u = 0; u < users; ++u)
    for (std::uint32_t i = 0; i < items; ++i) {
      bool taken = false;
      for (auto* s : disjoint_from) taken = taken || s->contains(u, i);
      if (!taken && rng.uniform() < p) edges.push_back({u, i});
    }
  return InteractionSet(users, items, std::move(edges));
}

struct Brute {
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t users = 0;
};

/// Full sort of every candidate, then metrics straight from the definitions.
inline Brute brute_metrics(const DenseMatrix& emb, NodeLayout layout, const std::vector<const InteractionSet*>& masks,
                    const InteractionSet& truth, std::uint32_t n) {
  Brute b;
  for (std::uint32_t u = 0; u < layout.users; ++u) {
    const auto t = truth.items_of(u);
    if (t.empty()) continue;
    std::vector<std::pair<double, std::uint32_t>> cand;
    for (std::uint32_t i = 0; i < layout.items; ++i) {
      bool masked = false;
      for (auto* m : masks) masked = masked || m->contains(u, i);
      if (masked) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < emb.cols(); ++c) s += emb(u, c) * emb(layout.users + i, c);
      cand.push_back({s, i});
    }
    std::sort(cand.begin(), cand.end(), [](auto& x, auto& y) { return x.first > y.first || (x.first == y.first && x.second < y.second); });
    const std::size_t take = std::min<std::size_t>(n, cand.size());
    std::size_t hits = 0;
    double dcg = 0.0;
    for (std::size_t r = 0; r < take; ++r) {
      if (std::find(t.begin(), t.end(), cand[r].second) != t.end()) {
        ++hits;
        dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
      }
    }
    double idcg = 0.0;
    for (std::size_t r = 0; r < std::min<std::size_t>(t.size(), n); ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    b.recall += static_cast<double>(hits) / static_cast<double>(t.size());
    b.ndcg += dcg / idcg;
    ++b.users;
  }
  if (b.users) {
    b.recall /= static_cast<double>(b.users);
    b.ndcg /= static_cast<double>(b.users);
  }
  return b;
}

/// The 4-community synthetic dataset split with the run seed.
inline SplitDataset blocks_split(std::uint64_t seed) {
  Rng gen = Rng(seed).split(streams::synthetic);
  const auto raw = blocks_dataset(BlocksSpec{}, gen);
  Rng split_rng = Rng(seed).split(streams::split);
  return build_splits(raw, SplitRatios{}, split_rng);
}

}  // namespace glrc::testing
