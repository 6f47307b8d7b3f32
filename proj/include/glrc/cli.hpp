#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "glrc/distill.hpp"

namespace glrc::cli {

// Process exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 1;
inline constexpr int kDataError = 2;
inline constexpr int kNumericError = 3;

/// Trains the teacher. Writes <out>/teacher.ckpt(+.json),
/// <out>/teacher_metrics.jsonl and the split used under <out>/data.
int cmd_train_teacher(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

struct DistillOptions {
  std::filesystem::path config;
  std::filesystem::path teacher;  // optional in baseline-bpr-mlp mode
  AblationToggles disable;        // OR-ed with the config's toggles
};

/// Student phase from a saved teacher (or the BPR-MLP baseline when the
/// config says so). Writes <out>/student.ckpt(+.json) and <out>/student_metrics.jsonl.
int cmd_distill(const DistillOptions& options, std::ostream& out, std::ostream& err);

struct EvaluateOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::uint32_t n = 20;
  bool mad = false;
  bool bench = false;
  std::filesystem::path against;  // the other model kind, required by bench
  std::size_t bench_repetitions = 9;
  std::string split = "test";
};

/// Prints a JSON metric report (recall<N>, ndcg<N>, ...) on `out`.
int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err);

struct ExportOptions {
  std::filesystem::path model;
  std::filesystem::path out;
  /// Export model outputs instead of the stored initial embeddings.
  /// Teachers need `data` for their graph.
  bool output_embeddings = false;
  std::filesystem::path data;
};

/// TSV lines: user|item <TAB> index <TAB> d values.
int cmd_export_embeddings(const ExportOptions& options, std::ostream& out, std::ostream& err);

/// Whole pipeline for the configured mode in one process.
int cmd_run(const std::filesystem::path& config_path, std::ostream& out, std::ostream& err);

/// Writes a community-block synthetic interaction TSV.
int cmd_make_synthetic(const std::filesystem::path& out_path, std::uint64_t seed, std::ostream& out,
                       std::ostream& err);

}  // namespace glrc::cli
