#include "glrc/trainer.hpp"

#include <chrono>
#include <cmath>

#include "glrc/error.hpp"
#include "glrc/eval.hpp"

namespace glrc {

void RunConfig::validate() const {
  weights.validate();
  if (dim == 0) throw ConfigError("model.dim must be >= 1");
  if (teacher_layers == 0) throw ConfigError("model.teacher_layers must be >= 1");
  if (mode == RunMode::distill && teacher_layers < 2) {
    throw ConfigError("distillation needs model.teacher_layers >= 2");
  }
  if (batch_t1 == 0 || batch_t2 == 0 || batch_bpr == 0) throw ConfigError("batch sizes must be >= 1");
  if (eval_every == 0) throw ConfigError("train.eval_every must be >= 1");
  if (!(teacher_lr > 0.0)) throw ConfigError("train.teacher_lr must be > 0");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw ConfigError("model.leaky_slope must be in [0, 1)");
  const bool any_toggle = ablation.disable_l1 || ablation.disable_l2 || ablation.disable_l3;
  if (any_toggle && mode != RunMode::distill) {
    throw ConfigError("ablation toggles are only valid in distill mode");
  }
}

TeacherTrainConfig RunConfig::teacher_train_config() const {
  TeacherTrainConfig t;
  t.model = {dim, teacher_layers, average_layers};
  t.max_epochs = teacher_epochs;
  t.patience = patience;
  t.batch_size = batch_bpr;
  t.learning_rate = teacher_lr;
  t.weight_decay = weights.teacher_decay;
  t.rule = plain_sgd ? UpdateRule::plain_sgd : UpdateRule::adam;
  return t;
}

StudentConfig RunConfig::student_config() const { return {dim, student_layers, leaky_slope}; }

SplitDataset load_dataset(const RunConfig& config) {
  if (config.interactions.empty() == config.split_dir.empty()) {
    throw ConfigError("exactly one of data.interactions / data.split_dir must be set");
  }
  if (!config.split_dir.empty()) return load_split_dir(config.split_dir);
  const auto raw = load_tsv(config.interactions);
  Rng rng = Rng(config.seed).split(streams::split);
  return build_splits(raw, config.ratios, rng);
}

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void apply_gradients(StudentModel& model, const StudentGrads& grads, Optimizer& optimizer) {
  optimizer.step(0, model.mutable_embeddings(), grads.embeddings);
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    optimizer.step(l + 1, model.mutable_weight(l), grads.weights[l]);
  }
}

// Shared epoch/validation/early-stopping skeleton for student-architecture training.
template <class EpochFn>
StudentTrainResult train_student_loop(const SplitDataset& split, const RunConfig& config, StudentModel model,
                                      EpochFn&& run_epoch) {
  StudentTrainResult result{model, {}, 0, -1.0, 0};
  for (std::size_t epoch = 1; epoch <= config.weights.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec = run_epoch(model, result.steps);
    rec.epoch = epoch;
    const bool evaluate = epoch % config.eval_every == 0 || epoch == config.weights.max_epochs;
    if (evaluate) {
      const auto report = evaluate_embeddings(student_embed_all(model), split, 20, EvalTarget::validation);
      rec.recall20 = report.recall;
      rec.ndcg20 = report.ndcg;
    }
    rec.seconds = seconds_since(start);
    result.log.push_back(rec);
    if (evaluate) {
      if (*rec.recall20 > result.best_recall) {
        result.best_recall = *rec.recall20;
        result.best_epoch = epoch;
        result.model = model;
      }
      if (epoch - result.best_epoch >= config.patience) break;
    }
  }
  if (result.best_epoch == 0) result.best_recall = 0.0;
  return result;
}

}  // namespace

StudentTrainResult distill_student(const SplitDataset& split, const TeacherModel& teacher,
                                   const RunConfig& config) {
  config.validate();
  if (teacher.config().layers < 2) {
    throw ConfigError("distillation needs a teacher with at least 2 layers");
  }
  const DenseMatrix& readout = teacher.readout();
  const DenseMatrix targets = teacher_targets(teacher);
  const TeacherView view{readout, targets};

  const Rng root(config.seed);
  Rng init_rng = root.split(streams::student_init);
  Rng sample_rng = root.split(streams::student_sampling);
  const auto layout = split.train.layout();
  Optimizer optimizer(config.plain_sgd ? UpdateRule::plain_sgd : UpdateRule::adam, config.weights.learning_rate);
  const std::size_t steps = (split.train.size() + config.batch_t2 - 1) / config.batch_t2;

  return train_student_loop(split, config, StudentModel(layout, config.student_config(), init_rng),
                            [&](StudentModel& model, std::size_t& step_count) {
    EpochRecord rec;
    const double share = 1.0 / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const auto t2 = sample_t2(split.train, config.batch_t2, sample_rng);
      const auto t1 = sample_t1(layout.users, layout.items, config.batch_t1, sample_rng);
      const auto step = assemble_step(view, model, config.weights, config.ablation, t1, t2);
      apply_gradients(model, step.grads, optimizer);
      rec.rec += share * step.report.rec;
      rec.l1 += share * step.report.lambdas[0] * step.report.l1;
      rec.l2 += share * step.report.lambdas[1] * step.report.l2;
      rec.l3 += share * step.report.lambdas[2] * step.report.l3;
      rec.l4 += share * step.report.lambdas[3] * step.report.l4;
      rec.total += share * step.report.total;
      ++step_count;
    }
    return rec;
  });
}

StudentTrainResult baseline_bpr_mlp(const SplitDataset& split, const RunConfig& config) {
  config.validate();
  const Rng root(config.seed);
  Rng init_rng = root.split(streams::student_init);
  Rng sample_rng = root.split(streams::student_sampling);
  const auto layout = split.train.layout();
  Optimizer optimizer(config.plain_sgd ? UpdateRule::plain_sgd : UpdateRule::adam, config.weights.learning_rate);
  const std::size_t steps = (split.train.size() + config.batch_bpr - 1) / config.batch_bpr;
  const double decay = config.weights.lambda4;

  return train_student_loop(split, config, StudentModel(layout, config.student_config(), init_rng),
                            [&](StudentModel& model, std::size_t& step_count) {
    EpochRecord rec;
    const double share = 1.0 / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      const auto batch = sample_bpr(split.train, config.batch_bpr, sample_rng);
      const auto cache = student_forward_all(model);
      auto bpr = bpr_loss(cache.output, layout, batch);
      const auto l4 = weight_decay(model.embeddings());
      if (!std::isfinite(bpr.loss) || !std::isfinite(l4.loss)) {
        throw NumericError("baseline BPR step: non-finite loss");
      }
      auto grads = student_backward(model, cache, bpr.grad);
      add_scaled(grads.embeddings, l4.grad, decay);
      apply_gradients(model, grads, optimizer);
      rec.rec += share * bpr.loss;
      rec.l4 += share * decay * l4.loss;
      rec.total += share * (bpr.loss + decay * l4.loss);
      ++step_count;
    }
    return rec;
  });
}

RunResult run(const RunConfig& config, const SplitDataset& split, const TeacherModel* pretrained) {
  config.validate();
  RunResult result;
  switch (config.mode) {
    case RunMode::teacher: {
      Rng rng(config.seed);
      result.teacher = train_teacher(split, config.teacher_train_config(), rng);
      break;
    }
    case RunMode::distill: {
      if (pretrained) {
        TeacherModel frozen = *pretrained;
        if (!frozen.propagated()) frozen.propagate();
        result.student = distill_student(split, frozen, config);
      } else {
        Rng rng(config.seed);
        result.teacher = train_teacher(split, config.teacher_train_config(), rng);
        result.student = distill_student(split, result.teacher->model, config);
      }
      break;
    }
    case RunMode::baseline_bpr_mlp:
      result.student = baseline_bpr_mlp(split, config);
      break;
  }
  return result;
}

const char* to_string(RunMode mode) {
  switch (mode) {
    case RunMode::teacher: return "teacher";
    case RunMode::distill: return "distill";
    case RunMode::baseline_bpr_mlp: return "baseline-bpr-mlp";
  }
  return "?";
}

RunMode parse_run_mode(const std::string& text) {
  if (text == "teacher") return RunMode::teacher;
  if (text == "distill") return RunMode::distill;
  if (text == "baseline-bpr-mlp") return RunMode::baseline_bpr_mlp;
  throw ConfigError("unknown mode '" + text + "' (teacher | distill | baseline-bpr-mlp)");
}

}  // namespace glrc
