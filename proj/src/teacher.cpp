#include "glrc/teacher.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "glrc/error.hpp"
#include "glrc/eval.hpp"
#include "glrc/mathops.hpp"

namespace glrc {

SparseAdjacency normalize_adjacency(const InteractionSet& train) {
  const auto layout = train.layout();
  std::vector<double> degree(layout.total(), 1.0);  // self-loop
  for (const auto& e : train.edges()) {
    degree[layout.user_row(e.user)] += 1.0;
    degree[layout.item_row(e.item)] += 1.0;
  }
  std::vector<SparseEntry> entries;
  entries.reserve(2 * train.size() + layout.total());
  for (std::uint32_t n = 0; n < layout.total(); ++n) {
    entries.push_back({n, n, 1.0 / degree[n]});
  }
  for (const auto& e : train.edges()) {
    const auto u = layout.user_row(e.user);
    const auto i = layout.item_row(e.item);
    // Same expression in both directions keeps the matrix bitwise symmetric.
    const double w = 1.0 / std::sqrt(degree[u] * degree[i]);
    entries.push_back({u, i, w});
    entries.push_back({i, u, w});
  }
  return SparseAdjacency::from_entries(layout.total(), std::move(entries));
}

TeacherModel::TeacherModel(const InteractionSet& train, TeacherConfig config, Rng& init_rng)
    : TeacherModel(train, config, xavier_init(train.node_count(), config.dim, init_rng)) {}

TeacherModel::TeacherModel(const InteractionSet& train, TeacherConfig config, DenseMatrix embeddings)
    : TeacherModel(normalize_adjacency(train), train.layout(), config, std::move(embeddings)) {}

TeacherModel::TeacherModel(SparseAdjacency adjacency, NodeLayout layout, TeacherConfig config,
                           DenseMatrix embeddings)
    : adjacency_(std::move(adjacency)), layout_(layout), config_(config), embeddings_(std::move(embeddings)) {
  if (config_.layers < 1) throw ConfigError("teacher: layers must be >= 1");
  if (embeddings_.rows() != layout_.total() || embeddings_.cols() != config_.dim) {
    throw InvalidShape("teacher: embeddings must be (users+items) x dim");
  }
  if (adjacency_.dim() != layout_.total()) {
    throw InvalidShape("teacher: adjacency does not match node count");
  }
}

void TeacherModel::propagate() {
  layers_.clear();
  layers_.reserve(config_.layers + 1);
  layers_.push_back(embeddings_);
  readout_ = embeddings_;
  for (std::uint32_t l = 0; l < config_.layers; ++l) {
    layers_.push_back(spmm(adjacency_, layers_.back()));
    add_scaled(readout_, layers_.back(), 1.0);
  }
  if (config_.average_layers) {
    for (double& v : readout_.values()) v /= static_cast<double>(config_.layers + 1);
  }
  if (!readout_.all_finite()) {
    throw NumericError("teacher propagate: non-finite embeddings");
  }
  fresh_ = true;
}

const DenseMatrix& TeacherModel::readout() const {
  if (!fresh_) throw ContractViolation("teacher readout requested before propagate()");
  return readout_;
}

const std::vector<DenseMatrix>& TeacherModel::layers() const {
  if (!fresh_) throw ContractViolation("teacher layers requested before propagate()");
  return layers_;
}

DenseMatrix& TeacherModel::mutable_embeddings() {
  fresh_ = false;
  return embeddings_;
}

DenseMatrix TeacherModel::backpropagate(const DenseMatrix& readout_grad) const {
  DenseMatrix total = readout_grad;
  DenseMatrix power = readout_grad;
  for (std::uint32_t l = 0; l < config_.layers; ++l) {
    power = spmm(adjacency_, power);
    add_scaled(total, power, 1.0);
  }
  if (config_.average_layers) {
    for (double& v : total.values()) v /= static_cast<double>(config_.layers + 1);
  }
  return total;
}

LossAndGrad bpr_loss(const DenseMatrix& output, NodeLayout layout, std::span<const BprTriplet> triplets) {
  LossAndGrad out{0.0, DenseMatrix(output.rows(), output.cols())};
  for (const auto& t : triplets) {
    const auto u = layout.user_row(t.user);
    const auto j = layout.item_row(t.positive);
    const auto k = layout.item_row(t.negative);
    const double z = dot(output.row(u), output.row(j)) - dot(output.row(u), output.row(k));
    out.loss += softplus(-z);  // -log sigm(z)
    const double g = -sigmoid(-z);
    axpy(out.grad.row(u), output.row(j), g);
    axpy(out.grad.row(u), output.row(k), -g);
    axpy(out.grad.row(j), output.row(u), g);
    axpy(out.grad.row(k), output.row(u), -g);
  }
  return out;
}

LossAndGrad teacher_objective(TeacherModel& model, std::span<const BprTriplet> triplets,
                              double weight_decay) {
  if (!model.propagated()) model.propagate();
  auto bpr = bpr_loss(model.readout(), model.layout(), triplets);
  LossAndGrad out{bpr.loss + weight_decay * frobenius_squared(model.embeddings()),
                  model.backpropagate(bpr.grad)};
  add_scaled(out.grad, model.embeddings(), 2.0 * weight_decay);
  return out;
}

TeacherStepLoss teacher_bpr_step(TeacherModel& model, std::span<const BprTriplet> triplets,
                                 double weight_decay, Optimizer& optimizer) {
  if (!model.propagated()) model.propagate();
  auto bpr = bpr_loss(model.readout(), model.layout(), triplets);
  TeacherStepLoss loss{bpr.loss, weight_decay * frobenius_squared(model.embeddings())};
  if (!std::isfinite(loss.total())) {
    throw NumericError("teacher BPR step: non-finite loss");
  }
  DenseMatrix grad = model.backpropagate(bpr.grad);
  add_scaled(grad, model.embeddings(), 2.0 * weight_decay);
  optimizer.step(0, model.mutable_embeddings(), grad);
  return loss;
}

DenseMatrix teacher_targets(const TeacherModel& model) {
  if (model.config().layers < 2) {
    throw ConfigError("teacher targets need at least 2 propagation layers, have " +
                      std::to_string(model.config().layers));
  }
  const auto& layers = model.layers();
  DenseMatrix targets = layers[2];
  for (std::size_t l = 3; l < layers.size(); ++l) add_scaled(targets, layers[l], 1.0);
  return targets;
}

TeacherTrainResult train_teacher(const SplitDataset& split, const TeacherTrainConfig& config, Rng& rng) {
  if (config.batch_size == 0) throw ConfigError("teacher batch size must be >= 1");
  Rng init_rng = rng.split(streams::teacher_init);
  Rng sample_rng = rng.split(streams::teacher_sampling);
  TeacherModel model(split.train, config.model, init_rng);
  Optimizer optimizer(config.rule, config.learning_rate);

  const std::size_t steps = (split.train.size() + config.batch_size - 1) / config.batch_size;
  TeacherTrainResult result{model, {}, 0, -1.0};
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    for (std::size_t s = 0; s < steps; ++s) {
      const auto batch = sample_bpr(split.train, config.batch_size, sample_rng);
      const auto loss = teacher_bpr_step(model, batch, config.weight_decay, optimizer);
      rec.rec += loss.bpr / static_cast<double>(steps);
      rec.l4 += loss.decay / static_cast<double>(steps);
    }
    rec.total = rec.rec + rec.l4;
    model.propagate();
    const auto report = evaluate_embeddings(model.readout(), split, 20, EvalTarget::validation);
    rec.recall20 = report.recall;
    rec.ndcg20 = report.ndcg;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.push_back(rec);
    if (report.recall > result.best_recall) {
      result.best_recall = report.recall;
      result.best_epoch = epoch;
      result.model = model;
    }
    if (epoch - result.best_epoch >= config.patience) break;
  }
  if (result.best_epoch == 0) {
    result.best_recall = 0.0;
  }
  result.model.propagate();
  return result;
}

}  // namespace glrc
