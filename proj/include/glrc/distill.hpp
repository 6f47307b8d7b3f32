#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "glrc/dataset.hpp"
#include "glrc/matrix.hpp"
#include "glrc/student.hpp"

namespace glrc {

struct LossWeights {
  double lambda1 = 1.0;   // prediction-level KD
  double lambda2 = 1.0;   // embedding-level KD
  double lambda3 = 1.0;   // adaptive contrastive regularization
  double lambda4 = 1e-4;  // student weight decay on initial embeddings
  double teacher_decay = 1e-4;
  double tau1 = 1.0;
  double tau2 = 1.0;
  double tau3 = 1.0;
  double epsilon = 0.2;
  double learning_rate = 1e-3;
  std::size_t max_epochs = 200;

  /// Throws ConfigError on negative weights, non-positive temperatures or
  /// epsilon outside (0, 1).
  void validate() const;
};

struct AblationToggles {
  bool disable_l1 = false;
  bool disable_l2 = false;
  bool disable_l3 = false;
};

/// Scalar loss plus its gradient on every embedding row.
struct TermResult {
  double loss = 0.0;
  DenseMatrix grad;
};

struct PredKdResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d z_student per sample
};

/// Binary cross-entropy between sigm(z_t / tau1) and sigm(z_s / tau1),
/// summed. Student probabilities are clamped to [1e-12, 1 - 1e-12] before
/// the logs; the gradient is the closed form -(1/tau1)(zbar_t - zbar_s).
PredKdResult pred_kd(std::span<const double> z_student, std::span<const double> z_teacher, double tau1);

/// Prediction-level KD over T_1 triplets, z = h_u.h_j - h_u.h_k for both models.
/// The teacher side is read-only.
TermResult prediction_distillation(const DenseMatrix& student_out, const DenseMatrix& teacher_out,
                                   NodeLayout layout, std::span<const KdTriplet> triplets, double tau1);

/// Embedding-level contrastive KD. Each T_2 user (item) anchor is pulled toward
/// its frozen teacher target against the softmax over all users (items):
///   -log exp(cos(h_a, t_a)/tau2) / sum_{x in same side} exp(cos(h_x, t_a)/tau2)
/// Anchors repeated in the batch count once per occurrence.
TermResult embed_kd(const DenseMatrix& student_out, const DenseMatrix& targets, NodeLayout layout,
                    std::span<const Interaction> batch, double tau2);

/// L_rec = -sum over T_2 pairs of h_u.h_i.
TermResult rec_loss(const DenseMatrix& student_out, NodeLayout layout, std::span<const Interaction> batch);

/// omega-weighted log-sum-exp push-apart terms: user anchors against all
/// users and all items, item anchors against all items. Self terms included.
/// `omega_by_row` holds one weight per embedding row.
TermResult contrastive_reg(const DenseMatrix& student_out, NodeLayout layout,
                           std::span<const Interaction> batch, std::span<const double> omega_by_row,
                           double tau3);

/// ||H||_F^2 and 2H.
TermResult weight_decay(const DenseMatrix& embeddings);

/// Distinct embedding rows touched by a T_2 batch, ascending.
std::vector<std::uint32_t> batch_nodes(NodeLayout layout, std::span<const Interaction> batch);

/// Output-embedding gradients of the individual losses for the T_2 nodes.
struct BatchGradients {
  std::vector<std::uint32_t> nodes;
  DenseMatrix pred;      // dL1/dh
  DenseMatrix embed;     // dL2/dh
  DenseMatrix combined;  // pred + embed
  DenseMatrix rec;       // dL_rec/dh

  /// Copies the rows for `nodes` out of full-catalog gradient matrices.
  static BatchGradients gather(std::vector<std::uint32_t> nodes, const DenseMatrix& pred,
                               const DenseMatrix& embed, const DenseMatrix& rec);
};

/// Per node: 1 - eps when <g12, g_rec> > <g1, g2>, otherwise 1 + eps.
/// Aligned with grads.nodes.
std::vector<double> omega_weights(const BatchGradients& grads, double epsilon);

/// Read-only teacher outputs used by a distillation step.
struct TeacherView {
  const DenseMatrix& readout;
  const DenseMatrix& targets;
};

struct LossReport {
  double rec = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
  double total = 0.0;
  /// lambda1..lambda4 after ablation toggles.
  std::array<double, 4> lambdas{};
  double omega_low_fraction = 0.0;
  std::size_t omega_nodes = 0;
};

struct StepResult {
  LossReport report;
  StudentGrads grads;
  std::vector<double> omega_by_row;
};

/// One student objective evaluation in training order: L1 on T_1, L2, omega
/// from the leaf gradients of L1, L2 and L_rec, L3, L_rec, L4, then the
/// weighted upstream gradient back through the MLP. Disabled terms are still
/// reported but weighted 0 and excluded from the omega rule. Passing
/// `fixed_omega_by_row` skips the omega rule (used for gradient checks).
StepResult assemble_step(const TeacherView& teacher, const StudentModel& student,
                         const LossWeights& weights, AblationToggles toggles,
                         std::span<const KdTriplet> t1, std::span<const Interaction> t2,
                         std::span<const double> fixed_omega_by_row = {});

}  // namespace glrc
