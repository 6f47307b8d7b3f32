#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "glrc/dataset.hpp"
#include "glrc/distill.hpp"
#include "glrc/epoch_record.hpp"
#include "glrc/student.hpp"
#include "glrc/teacher.hpp"

namespace glrc {

enum class RunMode { teacher, distill, baseline_bpr_mlp };

struct RunConfig {
  // Exactly one data source: a raw TSV (split here with `ratios` and the
  // run seed) or a directory with train/valid/test files.
  std::string interactions;
  std::string split_dir;
  SplitRatios ratios;

  std::uint32_t dim = 32;
  std::uint32_t teacher_layers = 2;
  std::uint32_t student_layers = 2;
  double leaky_slope = 0.01;
  bool average_layers = false;

  LossWeights weights;
  std::size_t batch_t1 = 100000;
  std::size_t batch_t2 = 4096;
  std::size_t batch_bpr = 4096;

  std::uint64_t seed = 1;
  std::size_t patience = 10;
  std::size_t eval_every = 1;
  std::size_t teacher_epochs = 200;
  double teacher_lr = 1e-3;

  AblationToggles ablation;
  RunMode mode = RunMode::distill;
  bool plain_sgd = false;

  std::string output_dir = "out";

  /// Throws ConfigError when a value is out of range. The data source is
  /// checked by load_dataset.
  void validate() const;

  TeacherTrainConfig teacher_train_config() const;
  StudentConfig student_config() const;
};

/// Loads and splits according to the config's data source.
SplitDataset load_dataset(const RunConfig& config);

struct StudentTrainResult {
  StudentModel model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_recall = 0.0;
  std::size_t steps = 0;
};

/// Student phase of the distillation loop. `teacher` must be propagated and
/// is only read. Returns the best-validation student.
StudentTrainResult distill_student(const SplitDataset& split, const TeacherModel& teacher,
                                   const RunConfig& config);

/// The student architecture trained with BPR on T_bpr plus weight decay, no teacher.
StudentTrainResult baseline_bpr_mlp(const SplitDataset& split, const RunConfig& config);

struct RunResult {
  std::optional<TeacherTrainResult> teacher;
  std::optional<StudentTrainResult> student;
};

/// Runs the configured mode. In distill mode the teacher is trained first
/// unless `pretrained` is given.
RunResult run(const RunConfig& config, const SplitDataset& split, const TeacherModel* pretrained = nullptr);

const char* to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);

}  // namespace glrc
