#include "glrc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "glrc/error.hpp"
#include "glrc/mathops.hpp"
#include "glrc/parallel.hpp"
#include "glrc/student.hpp"
#include "glrc/teacher.hpp"

namespace glrc {

RankingResult rank_all(const DenseMatrix& embeddings, NodeLayout layout,
                       std::span<const InteractionSet* const> masks, const InteractionSet& truth,
                       std::uint32_t n) {
  if (n == 0) throw InvalidInput("rank_all: N must be >= 1");
  if (embeddings.rows() != layout.total()) {
    throw InvalidShape("rank_all: embeddings do not cover all nodes");
  }
  RankingResult result;
  result.n = n;
  std::vector<std::uint32_t> users;
  for (std::uint32_t u = 0; u < truth.user_count(); ++u) {
    if (!truth.items_of(u).empty()) users.push_back(u);
  }
  result.lists.resize(users.size());

  parallel_for(users.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> scores(layout.items);
    std::vector<std::uint32_t> candidates;
    for (std::size_t k = begin; k < end; ++k) {
      const std::uint32_t u = users[k];
      const auto user_vec = embeddings.row(layout.user_row(u));
      candidates.clear();
      for (std::uint32_t i = 0; i < layout.items; ++i) {
        bool masked = false;
        for (const auto* m : masks) {
          if (m->contains(u, i)) {
            masked = true;
            break;
          }
        }
        if (masked) continue;
        scores[i] = dot(user_vec, embeddings.row(layout.item_row(i)));
        candidates.push_back(i);
      }
      const auto take = std::min<std::size_t>(n, candidates.size());
      std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take),
                        candidates.end(), [&](std::uint32_t a, std::uint32_t b) {
                          return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
                        });
      auto& list = result.lists[k];
      list.user = u;
      list.items.assign(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take));
      list.scores.reserve(take);
      for (auto i : list.items) list.scores.push_back(scores[i]);
    }
  }, 16);
  return result;
}

RankingResult rank_all(const DenseMatrix& embeddings, const SplitDataset& split, std::uint32_t n,
                       EvalTarget target) {
  if (target == EvalTarget::validation) {
    const InteractionSet* masks[] = {&split.train};
    return rank_all(embeddings, split.train.layout(), masks, split.valid, n);
  }
  const InteractionSet* masks[] = {&split.train, &split.valid};
  return rank_all(embeddings, split.train.layout(), masks, split.test, n);
}

namespace {

std::size_t hits_in(const RankedList& list, const InteractionSet& truth) {
  return static_cast<std::size_t>(std::count_if(list.items.begin(), list.items.end(), [&](std::uint32_t i) {
    return truth.contains(list.user, i);
  }));
}

}  // namespace

double recall_at_n(const RankingResult& ranking, const InteractionSet& truth) {
  if (ranking.lists.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& list : ranking.lists) {
    sum += static_cast<double>(hits_in(list, truth)) / static_cast<double>(truth.items_of(list.user).size());
  }
  return sum / static_cast<double>(ranking.lists.size());
}

double ndcg_at_n(const RankingResult& ranking, const InteractionSet& truth) {
  if (ranking.lists.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& list : ranking.lists) {
    double dcg = 0.0;
    for (std::size_t r = 0; r < list.items.size(); ++r) {
      if (truth.contains(list.user, list.items[r])) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    }
    const auto ideal = std::min<std::size_t>(truth.items_of(list.user).size(), ranking.n);
    double idcg = 0.0;
    for (std::size_t r = 0; r < ideal; ++r) idcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
    sum += dcg / idcg;
  }
  return sum / static_cast<double>(ranking.lists.size());
}

MetricReport evaluate_embeddings(const DenseMatrix& embeddings, const SplitDataset& split,
                                 std::uint32_t n, EvalTarget target) {
  const auto ranking = rank_all(embeddings, split, n, target);
  const auto& truth = target == EvalTarget::validation ? split.valid : split.test;
  MetricReport report;
  report.n = n;
  report.recall = recall_at_n(ranking, truth);
  report.ndcg = ndcg_at_n(ranking, truth);
  report.users = ranking.lists.size();
  return report;
}

double random_recall_expectation(const SplitDataset& split, std::uint32_t n, EvalTarget target) {
  const auto& truth = target == EvalTarget::validation ? split.valid : split.test;
  double sum = 0.0;
  std::size_t users = 0;
  for (std::uint32_t u = 0; u < truth.user_count(); ++u) {
    if (truth.items_of(u).empty()) continue;
    std::size_t masked = split.train.items_of(u).size();
    if (target == EvalTarget::test) masked += split.valid.items_of(u).size();
    const double candidates = static_cast<double>(truth.item_count() - masked);
    sum += std::min(1.0, static_cast<double>(n) / candidates);
    ++users;
  }
  return users ? sum / static_cast<double>(users) : 0.0;
}

double mad(const DenseMatrix& embeddings, std::span<const std::uint32_t> rows, std::size_t* excluded) {
  std::vector<std::vector<double>> unit;
  std::size_t skipped = 0;
  for (auto r : rows) {
    const auto v = embeddings.row(r);
    const double norm = std::sqrt(dot(v, v));
    if (norm == 0.0) {
      ++skipped;
      continue;
    }
    std::vector<double> u(v.begin(), v.end());
    for (double& x : u) x /= norm;
    unit.push_back(std::move(u));
  }
  if (excluded) *excluded = skipped;
  if (unit.size() < 2) {
    throw InvalidInput("mad: need at least two non-zero rows");
  }
  // Symmetric, so sum unordered pairs and double.
  double sum = 0.0;
  for (std::size_t p = 0; p < unit.size(); ++p) {
    for (std::size_t q = p + 1; q < unit.size(); ++q) {
      sum += 1.0 - std::clamp(dot(unit[p], unit[q]), -1.0, 1.0);
    }
  }
  const double pairs = static_cast<double>(unit.size()) * static_cast<double>(unit.size() - 1);
  return 2.0 * sum / pairs;
}

namespace {

std::vector<std::uint32_t> top_k_by_degree(const std::vector<std::size_t>& degree, std::size_t k,
                                          std::uint32_t row_offset) {
  std::vector<std::uint32_t> idx(degree.size());
  std::iota(idx.begin(), idx.end(), 0u);
  const auto take = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take), idx.end(),
                    [&](std::uint32_t a, std::uint32_t b) {
                      return degree[a] != degree[b] ? degree[a] > degree[b] : a < b;
                    });
  idx.resize(take);
  for (auto& i : idx) i += row_offset;
  return idx;
}

}  // namespace

std::vector<std::uint32_t> popular_user_rows(const InteractionSet& train, std::size_t k) {
  return top_k_by_degree(train.user_degrees(), k, 0);
}

std::vector<std::uint32_t> popular_item_rows(const InteractionSet& train, std::size_t k) {
  return top_k_by_degree(train.item_degrees(), k, train.user_count());
}

DenseMatrix score_all(const DenseMatrix& embeddings, NodeLayout layout) {
  DenseMatrix scores(layout.users, layout.items);
  parallel_for(layout.users, [&](std::size_t begin, std::size_t end) {
    for (std::size_t u = begin; u < end; ++u) {
      const auto uv = embeddings.row(u);
      auto dst = scores.row(u);
      for (std::uint32_t i = 0; i < layout.items; ++i) {
        dst[i] = dot(uv, embeddings.row(layout.item_row(i)));
      }
    }
  }, 16);
  return scores;
}

namespace {

template <class Fn>
double median_seconds(std::size_t repetitions, Fn&& fn) {
  std::vector<double> samples;
  for (std::size_t r = 0; r < repetitions; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    samples.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

}  // namespace

InferenceTiming bench_inference(TeacherModel& teacher, const StudentModel& student,
                                std::size_t repetitions) {
  if (repetitions == 0) throw InvalidInput("bench_inference: repetitions must be >= 1");
  const NodeLayout layout{teacher.user_count(), teacher.item_count()};
  double sink = 0.0;
  InferenceTiming t;
  t.repetitions = repetitions;
  t.teacher_seconds = median_seconds(repetitions, [&] {
    teacher.propagate();
    sink += score_all(teacher.readout(), layout)(0, 0);
  });
  t.student_seconds = median_seconds(repetitions, [&] {
    sink += score_all(student_embed_all(student), layout)(0, 0);
  });
  t.ratio = t.teacher_seconds / t.student_seconds;
  if (!std::isfinite(sink)) throw NumericError("bench_inference: non-finite scores");
  return t;
}

}  // namespace glrc
