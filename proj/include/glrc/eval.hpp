#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "glrc/dataset.hpp"
#include "glrc/matrix.hpp"

namespace glrc {

class TeacherModel;
class StudentModel;

struct RankedList {
  std::uint32_t user = 0;
  std::vector<std::uint32_t> items;
  std::vector<double> scores;
};

/// Top-N lists for every user holding at least one ground-truth item.
/// Masked items never appear; ties resolve to the lower item index.
struct RankingResult {
  std::uint32_t n = 0;
  std::vector<RankedList> lists;
};

enum class EvalTarget { validation, test };

/// Scores every item for each evaluable user by dot product of embedding
/// rows, excluding items in any of `masks`.
RankingResult rank_all(const DenseMatrix& embeddings, NodeLayout layout,
                       std::span<const InteractionSet* const> masks, const InteractionSet& truth,
                       std::uint32_t n);

/// Validation masks train; test masks train and validation.
RankingResult rank_all(const DenseMatrix& embeddings, const SplitDataset& split, std::uint32_t n,
                       EvalTarget target);

double recall_at_n(const RankingResult& ranking, const InteractionSet& truth);
double ndcg_at_n(const RankingResult& ranking, const InteractionSet& truth);

struct MetricReport {
  std::uint32_t n = 20;
  double recall = 0.0;
  double ndcg = 0.0;
  std::size_t users = 0;
  std::optional<double> mad_user;
  std::optional<double> mad_item;
};

MetricReport evaluate_embeddings(const DenseMatrix& embeddings, const SplitDataset& split,
                                 std::uint32_t n, EvalTarget target);

/// Expected Recall@N of a uniformly random ranking over each user's
/// unmasked candidates: mean of min(1, N / candidates).
double random_recall_expectation(const SplitDataset& split, std::uint32_t n, EvalTarget target);

/// Mean of (1 - cos) over ordered distinct pairs of the given rows.
/// Zero-norm rows are skipped and counted in `excluded`.
double mad(const DenseMatrix& embeddings, std::span<const std::uint32_t> rows,
           std::size_t* excluded = nullptr);

/// Embedding rows of the k users (or items) with the highest train degree;
/// ties by lower index.
std::vector<std::uint32_t> popular_user_rows(const InteractionSet& train, std::size_t k = 500);
std::vector<std::uint32_t> popular_item_rows(const InteractionSet& train, std::size_t k = 500);

/// users x items score matrix.
DenseMatrix score_all(const DenseMatrix& embeddings, NodeLayout layout);

struct InferenceTiming {
  double teacher_seconds = 0.0;
  double student_seconds = 0.0;
  double ratio = 0.0;  // teacher / student
  std::size_t repetitions = 0;
};

/// Median wall-clock over `repetitions` of (a) teacher propagate + full
/// scoring and (b) student full-catalog forward + full scoring.
InferenceTiming bench_inference(TeacherModel& teacher, const StudentModel& student,
                                std::size_t repetitions);

}  // namespace glrc
