#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glrc/adam.hpp"
#include "glrc/dataset.hpp"
#include "glrc/epoch_record.hpp"
#include "glrc/matrix.hpp"
#include "glrc/sparse.hpp"

namespace glrc {

/// D^{-1/2}(A + I)D^{-1/2} over the bipartite user+item graph, with D the
/// degree of (A + I). Entry (a, b) is 1 / sqrt(d_a d_b).
SparseAdjacency normalize_adjacency(const InteractionSet& train);

struct TeacherConfig {
  std::uint32_t dim = 32;
  std::uint32_t layers = 2;
  /// Divide the layer sum by (layers + 1). Off by default: readout is the plain sum.
  bool average_layers = false;
};

/// Lightweight GCN: linear propagation of trainable initial embeddings
/// with a layer-sum readout. The propagation cache goes stale whenever the
/// embeddings are mutated; readout() then refuses until propagate() runs.
class TeacherModel {
 public:
  TeacherModel(const InteractionSet& train, TeacherConfig config, Rng& init_rng);
  TeacherModel(const InteractionSet& train, TeacherConfig config, DenseMatrix embeddings);
  TeacherModel(SparseAdjacency adjacency, NodeLayout layout, TeacherConfig config, DenseMatrix embeddings);

  void propagate();
  bool propagated() const { return fresh_; }

  const DenseMatrix& readout() const;
  /// H_0 .. H_L from the last propagate().
  const std::vector<DenseMatrix>& layers() const;

  /// Chain rule through the readout: sum_l A^l * g (A is symmetric).
  DenseMatrix backpropagate(const DenseMatrix& readout_grad) const;

  const DenseMatrix& embeddings() const { return embeddings_; }
  DenseMatrix& mutable_embeddings();

  const SparseAdjacency& adjacency() const { return adjacency_; }
  const TeacherConfig& config() const { return config_; }
  NodeLayout layout() const { return layout_; }
  std::uint32_t user_count() const { return layout_.users; }
  std::uint32_t item_count() const { return layout_.items; }

 private:
  SparseAdjacency adjacency_;
  NodeLayout layout_;
  TeacherConfig config_;
  DenseMatrix embeddings_;
  std::vector<DenseMatrix> layers_;
  DenseMatrix readout_;
  bool fresh_ = false;
};

struct LossAndGrad {
  double loss = 0.0;
  DenseMatrix grad;
};

/// -sum log sigm(y_ij - y_ik) over the triplets, with its gradient on the
/// output embedding rows. Shared by the teacher and the BPR-MLP baseline.
LossAndGrad bpr_loss(const DenseMatrix& output, NodeLayout layout, std::span<const BprTriplet> triplets);

/// Full teacher objective (BPR + weight_decay * ||H||_F^2) and its gradient on
/// the initial embeddings. Propagates if the cache is stale.
LossAndGrad teacher_objective(TeacherModel& model, std::span<const BprTriplet> triplets,
                              double weight_decay);

struct TeacherStepLoss {
  double bpr = 0.0;
  double decay = 0.0;
  double total() const { return bpr + decay; }
};

/// One optimizer step on the teacher objective. Throws NumericError and
/// leaves the model untouched if the loss is not finite.
TeacherStepLoss teacher_bpr_step(TeacherModel& model, std::span<const BprTriplet> triplets,
                                 double weight_decay, Optimizer& optimizer);

/// Frozen distillation targets sum_{l>=2} H_l. Requires layers >= 2.
DenseMatrix teacher_targets(const TeacherModel& model);

struct TeacherTrainConfig {
  TeacherConfig model;
  std::size_t max_epochs = 200;
  std::size_t patience = 10;
  std::size_t batch_size = 4096;
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  UpdateRule rule = UpdateRule::adam;
};

struct TeacherTrainResult {
  TeacherModel model;
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  double best_recall = 0.0;
};

/// BPR epochs of ceil(|train| / batch) steps, validation Recall@20 after
/// each, early stop once `patience` epochs pass without improvement.
/// Returns the best-validation weights.
TeacherTrainResult train_teacher(const SplitDataset& split, const TeacherTrainConfig& config, Rng& rng);

}  // namespace glrc
