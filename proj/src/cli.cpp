#include "glrc/cli.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <nlohmann/json.hpp>

#include "glrc/checkpoint.hpp"
#include "glrc/config.hpp"
#include "glrc/error.hpp"
#include "glrc/eval.hpp"
#include "glrc/metrics_log.hpp"
#include "glrc/synthetic.hpp"
#include "glrc/trainer.hpp"

namespace glrc::cli {
namespace fs = std::filesystem;

namespace {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const DegenerateVector& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const InvalidShape& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const InvalidInput& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  }
}

RunConfig read_config(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
  return load_config(path);
}

CheckpointMeta meta_for(const RunConfig& config, std::size_t epoch, double recall) {
  return {config_hash(config), config.seed, epoch, recall};
}

std::string format_float(float v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(v));
  return buf;
}

}  // namespace

int cmd_train_teacher(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = read_config(config_path);
    config.mode = RunMode::teacher;
    const auto split = load_dataset(config);
    const fs::path dir = config.output_dir;
    save_split_dir(split, dir / "data");
    Rng rng(config.seed);
    const auto trained = train_teacher(split, config.teacher_train_config(), rng);
    write_checkpoint(dir / "teacher.ckpt", to_checkpoint(trained.model),
                     meta_for(config, trained.best_epoch, trained.best_recall));
    write_metrics_log(dir / "teacher_metrics.jsonl", trained.log);
    out << "teacher: best epoch " << trained.best_epoch << ", validation recall@20 " << trained.best_recall
        << " -> " << (dir / "teacher.ckpt").string() << '\n';
    return kOk;
  });
}

int cmd_distill(const DistillOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    RunConfig config = read_config(options.config);
    if (config.mode == RunMode::teacher) config.mode = RunMode::distill;
    config.ablation.disable_l1 |= options.disable.disable_l1;
    config.ablation.disable_l2 |= options.disable.disable_l2;
    config.ablation.disable_l3 |= options.disable.disable_l3;
    config.validate();
    const auto split = load_dataset(config);
    const fs::path dir = config.output_dir;

    StudentTrainResult trained = [&] {
      if (config.mode == RunMode::baseline_bpr_mlp) return baseline_bpr_mlp(split, config);
      if (options.teacher.empty()) throw ConfigError("distill mode needs --teacher <checkpoint>");
      const auto ckpt = read_checkpoint(options.teacher);
      if (ckpt.header.kind == ModelKind::teacher && ckpt.header.layers < 2) {
        throw ConfigError("teacher checkpoint has " + std::to_string(ckpt.header.layers) +
                          " layers; embedding distillation needs at least 2");
      }
      TeacherModel teacher = teacher_from_checkpoint(ckpt, split.train);
      teacher.propagate();
      return distill_student(split, teacher, config);
    }();
    write_checkpoint(dir / "student.ckpt", to_checkpoint(trained.model),
                     meta_for(config, trained.best_epoch, trained.best_recall));
    write_metrics_log(dir / "student_metrics.jsonl", trained.log);
    out << to_string(config.mode) << ": best epoch " << trained.best_epoch << ", validation recall@20 "
        << trained.best_recall << " -> " << (dir / "student.ckpt").string() << '\n';
    return kOk;
  });
}

int cmd_evaluate(const EvaluateOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (options.n == 0) throw ConfigError("--n must be >= 1");
    EvalTarget target;
    if (options.split == "test") {
      target = EvalTarget::test;
    } else if (options.split == "valid") {
      target = EvalTarget::validation;
    } else {
      throw ConfigError("--split must be test or valid");
    }
    const auto split = load_split_dir(options.data);
    const auto ckpt = read_checkpoint(options.model);
    if (ckpt.header.users != split.train.user_count() || ckpt.header.items != split.train.item_count()) {
      throw DataError("model has " + std::to_string(ckpt.header.users) + " users / " +
                      std::to_string(ckpt.header.items) + " items but data has " +
                      std::to_string(split.train.user_count()) + " / " + std::to_string(split.train.item_count()));
    }

    std::optional<TeacherModel> teacher;
    std::optional<StudentModel> student;
    auto load_any = [&](const Checkpoint& c) {
      if (c.header.kind == ModelKind::teacher) {
        teacher.emplace(teacher_from_checkpoint(c, split.train));
        teacher->propagate();
      } else {
        student.emplace(student_from_checkpoint(c));
      }
    };
    load_any(ckpt);
    const bool is_teacher = ckpt.header.kind == ModelKind::teacher;
    const DenseMatrix embeddings = is_teacher ? teacher->readout() : student_embed_all(*student);

    const auto report = evaluate_embeddings(embeddings, split, options.n, target);
    nlohmann::ordered_json j;
    const auto n = std::to_string(options.n);
    j["model"] = is_teacher ? "teacher" : "student";
    j["split"] = options.split;
    j["n"] = options.n;
    j["users"] = report.users;
    j["recall" + n] = report.recall;
    j["ndcg" + n] = report.ndcg;
    if (options.mad) {
      std::size_t skipped_users = 0, skipped_items = 0;
      j["mad_user"] = mad(embeddings, popular_user_rows(split.train), &skipped_users);
      j["mad_item"] = mad(embeddings, popular_item_rows(split.train), &skipped_items);
      if (skipped_users + skipped_items > 0) {
        err << "warning: " << skipped_users + skipped_items << " zero-norm rows excluded from MAD\n";
      }
    }
    if (options.bench) {
      if (options.against.empty()) throw ConfigError("--bench needs --against <checkpoint of the other model>");
      const auto other = read_checkpoint(options.against);
      if (other.header.kind == ckpt.header.kind) {
        throw ConfigError("--against must be the other model kind (one teacher and one student)");
      }
      load_any(other);
      const auto timing = bench_inference(*teacher, *student, options.bench_repetitions);
      j["bench"] = {{"teacher_seconds", timing.teacher_seconds},
                    {"student_seconds", timing.student_seconds},
                    {"teacher_over_student", timing.ratio},
                    {"repetitions", timing.repetitions}};
    }
    out << j.dump(2) << '\n';
    return kOk;
  });
}

int cmd_export_embeddings(const ExportOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto ckpt = read_checkpoint(options.model);
    DenseMatrix values = ckpt.tensors.at(0);
    if (options.output_embeddings) {
      if (ckpt.header.kind == ModelKind::student) {
        values = student_embed_all(student_from_checkpoint(ckpt));
      } else {
        if (options.data.empty()) throw ConfigError("teacher output embeddings need --data <split dir>");
        auto teacher = teacher_from_checkpoint(ckpt, load_split_dir(options.data).train);
        teacher.propagate();
        values = teacher.readout();
      }
    }
    std::ofstream file(options.out);
    if (!file) throw DataError("cannot write " + options.out.string());
    const std::uint32_t users = ckpt.header.users;
    for (std::size_t r = 0; r < values.rows(); ++r) {
      const bool user = r < users;
      file << (user ? "user" : "item") << '\t' << (user ? r : r - users);
      for (double v : values.row(r)) file << '\t' << format_float(static_cast<float>(v));
      file << '\n';
    }
    if (!file) throw DataError("write failed for " + options.out.string());
    out << "wrote " << values.rows() << " rows to " << options.out.string() << '\n';
    return kOk;
  });
}

int cmd_run(const fs::path& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const RunConfig config = read_config(config_path);
    const auto split = load_dataset(config);
    const fs::path dir = config.output_dir;
    save_split_dir(split, dir / "data");
    const auto result = run(config, split);
    if (result.teacher) {
      write_checkpoint(dir / "teacher.ckpt", to_checkpoint(result.teacher->model),
                       meta_for(config, result.teacher->best_epoch, result.teacher->best_recall));
      write_metrics_log(dir / "teacher_metrics.jsonl", result.teacher->log);
      out << "teacher: validation recall@20 " << result.teacher->best_recall << '\n';
    }
    if (result.student) {
      write_checkpoint(dir / "student.ckpt", to_checkpoint(result.student->model),
                       meta_for(config, result.student->best_epoch, result.student->best_recall));
      write_metrics_log(dir / "student_metrics.jsonl", result.student->log);
      out << "student: validation recall@20 " << result.student->best_recall << '\n';
    }
    return kOk;
  });
}

int cmd_make_synthetic(const fs::path& out_path, std::uint64_t seed, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    Rng rng = Rng(seed).split(streams::synthetic);
    const auto raw = blocks_dataset(BlocksSpec{}, rng);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    std::ofstream file(out_path);
    if (!file) throw DataError("cannot write " + out_path.string());
    for (const auto& e : raw.edges) file << raw.users.name(e.user) << '\t' << raw.items.name(e.item) << '\n';
    out << "wrote " << raw.edges.size() << " interactions to " << out_path.string() << '\n';
    return kOk;
  });
}

}  // namespace glrc::cli
