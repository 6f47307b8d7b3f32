#include "glrc/distill.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glrc/error.hpp"
#include "glrc/mathops.hpp"

namespace glrc {

void LossWeights::validate() const {
  for (double lambda : {lambda1, lambda2, lambda3, lambda4, teacher_decay}) {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("loss weights must be finite and >= 0");
  }
  for (double tau : {tau1, tau2, tau3}) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw ConfigError("temperatures must be finite and > 0");
  }
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ConfigError("epsilon must lie strictly inside (0, 1)");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be > 0");
}

PredKdResult pred_kd(std::span<const double> z_student, std::span<const double> z_teacher, double tau1) {
  if (!(tau1 > 0.0)) throw ConfigError("pred_kd: tau1 must be > 0");
  if (z_student.size() != z_teacher.size()) throw InvalidShape("pred_kd: score arrays differ in length");
  constexpr double kClamp = 1e-12;
  PredKdResult out;
  out.grad.resize(z_student.size());
  for (std::size_t n = 0; n < z_student.size(); ++n) {
    const double target = sigmoid(z_teacher[n] / tau1);
    const double prob = sigmoid(z_student[n] / tau1);
    const double clamped = std::clamp(prob, kClamp, 1.0 - kClamp);
    out.loss -= target * std::log(clamped) + (1.0 - target) * std::log(1.0 - clamped);
    out.grad[n] = -(target - prob) / tau1;
  }
  return out;
}

TermResult prediction_distillation(const DenseMatrix& student_out, const DenseMatrix& teacher_out,
                                   NodeLayout layout, std::span<const KdTriplet> triplets, double tau1) {
  std::vector<double> zs(triplets.size());
  std::vector<double> zt(triplets.size());
  for (std::size_t n = 0; n < triplets.size(); ++n) {
    const auto& t = triplets[n];
    const auto u = layout.user_row(t.user);
    const auto j = layout.item_row(t.first);
    const auto k = layout.item_row(t.second);
    zs[n] = dot(student_out.row(u), student_out.row(j)) - dot(student_out.row(u), student_out.row(k));
    zt[n] = dot(teacher_out.row(u), teacher_out.row(j)) - dot(teacher_out.row(u), teacher_out.row(k));
  }
  const auto kd = pred_kd(zs, zt, tau1);
  TermResult out{kd.loss, DenseMatrix(student_out.rows(), student_out.cols())};
  for (std::size_t n = 0; n < triplets.size(); ++n) {
    const auto& t = triplets[n];
    const double g = kd.grad[n];
    if (g == 0.0) continue;
    const auto u = layout.user_row(t.user);
    const auto j = layout.item_row(t.first);
    const auto k = layout.item_row(t.second);
    axpy(out.grad.row(u), student_out.row(j), g);
    axpy(out.grad.row(u), student_out.row(k), -g);
    axpy(out.grad.row(j), student_out.row(u), g);
    axpy(out.grad.row(k), student_out.row(u), -g);
  }
  return out;
}

namespace {

// Anchor rows with their multiplicity in the batch.
struct Anchors {
  std::vector<std::uint32_t> rows;
  std::vector<double> counts;
};

Anchors count_anchors(std::vector<std::uint32_t> rows) {
  std::sort(rows.begin(), rows.end());
  Anchors a;
  for (std::size_t i = 0; i < rows.size();) {
    std::size_t j = i;
    while (j < rows.size() && rows[j] == rows[i]) ++j;
    a.rows.push_back(rows[i]);
    a.counts.push_back(static_cast<double>(j - i));
    i = j;
  }
  return a;
}

Anchors user_anchors(NodeLayout layout, std::span<const Interaction> batch) {
  std::vector<std::uint32_t> rows;
  rows.reserve(batch.size());
  for (const auto& p : batch) rows.push_back(layout.user_row(p.user));
  return count_anchors(std::move(rows));
}

Anchors item_anchors(NodeLayout layout, std::span<const Interaction> batch) {
  std::vector<std::uint32_t> rows;
  rows.reserve(batch.size());
  for (const auto& p : batch) rows.push_back(layout.item_row(p.item));
  return count_anchors(std::move(rows));
}

struct RowRange {
  std::uint32_t begin;
  std::uint32_t end;
};

// Unit rows and norms over [range); zero rows are degenerate.
void normalize_rows(const DenseMatrix& m, RowRange range, DenseMatrix& unit, std::vector<double>& norms,
                    const char* what) {
  for (std::uint32_t r = range.begin; r < range.end; ++r) {
    const auto v = m.row(r);
    const double n = std::sqrt(dot(v, v));
    if (n == 0.0) {
      throw DegenerateVector(std::string(what) + ": zero-norm embedding at row " + std::to_string(r));
    }
    norms[r] = n;
    auto dst = unit.row(r);
    for (std::size_t c = 0; c < v.size(); ++c) dst[c] = v[c] / n;
  }
}

// InfoNCE for one side (users or items). Accumulates into `loss` and into
// `unit_grad`, the gradient with respect to the unit-normalized rows.
void embed_kd_side(const DenseMatrix& unit, const DenseMatrix& targets, const Anchors& anchors,
                   RowRange side, double tau2, double& loss, DenseMatrix& unit_grad) {
  const std::size_t d = unit.cols();
  std::vector<double> logits(side.end - side.begin);
  std::vector<double> target_unit(d);
  for (std::size_t a = 0; a < anchors.rows.size(); ++a) {
    const auto row = anchors.rows[a];
    const auto t = targets.row(row);
    const double tn = std::sqrt(dot(t, t));
    if (tn == 0.0) {
      throw DegenerateVector("embed_kd: zero-norm teacher target at row " + std::to_string(row));
    }
    for (std::size_t c = 0; c < d; ++c) target_unit[c] = t[c] / tn;
    for (std::uint32_t x = side.begin; x < side.end; ++x) {
      logits[x - side.begin] = std::clamp(dot(unit.row(x), target_unit), -1.0, 1.0) / tau2;
    }
    const double lse = logsumexp(logits);
    const double m = anchors.counts[a];
    loss += m * (lse - logits[row - side.begin]);
    for (std::uint32_t x = side.begin; x < side.end; ++x) {
      double coef = std::exp(logits[x - side.begin] - lse);
      if (x == row) coef -= 1.0;
      coef *= m / tau2;
      axpy(unit_grad.row(x), target_unit, coef);
    }
  }
}

}  // namespace

TermResult embed_kd(const DenseMatrix& student_out, const DenseMatrix& targets, NodeLayout layout,
                    std::span<const Interaction> batch, double tau2) {
  if (!(tau2 > 0.0)) throw ConfigError("embed_kd: tau2 must be > 0");
  if (targets.rows() != student_out.rows() || targets.cols() != student_out.cols()) {
    throw InvalidShape("embed_kd: targets must match student embeddings");
  }
  TermResult out{0.0, DenseMatrix(student_out.rows(), student_out.cols())};
  if (batch.empty()) return out;

  const RowRange users{0, layout.users};
  const RowRange items{layout.users, layout.total()};
  DenseMatrix unit(student_out.rows(), student_out.cols());
  std::vector<double> norms(student_out.rows(), 0.0);
  normalize_rows(student_out, users, unit, norms, "embed_kd");
  normalize_rows(student_out, items, unit, norms, "embed_kd");

  DenseMatrix unit_grad(student_out.rows(), student_out.cols());
  embed_kd_side(unit, targets, user_anchors(layout, batch), users, tau2, out.loss, unit_grad);
  embed_kd_side(unit, targets, item_anchors(layout, batch), items, tau2, out.loss, unit_grad);

  // Chain through h / ||h||: (g - (g . u) u) / ||h||.
  for (std::uint32_t r = 0; r < layout.total(); ++r) {
    const auto g = unit_grad.row(r);
    const auto u = unit.row(r);
    const double proj = dot(g, u);
    auto dst = out.grad.row(r);
    for (std::size_t c = 0; c < dst.size(); ++c) dst[c] = (g[c] - proj * u[c]) / norms[r];
  }
  return out;
}

TermResult rec_loss(const DenseMatrix& student_out, NodeLayout layout, std::span<const Interaction> batch) {
  TermResult out{0.0, DenseMatrix(student_out.rows(), student_out.cols())};
  for (const auto& p : batch) {
    const auto u = layout.user_row(p.user);
    const auto i = layout.item_row(p.item);
    out.loss -= dot(student_out.row(u), student_out.row(i));
    axpy(out.grad.row(u), student_out.row(i), -1.0);
    axpy(out.grad.row(i), student_out.row(u), -1.0);
  }
  return out;
}

namespace {

// coef * logsumexp_{x in side}(h_a . h_x / tau3), with gradients.
void push_apart(const DenseMatrix& h, std::uint32_t anchor, RowRange side, double coef, double tau3,
                std::vector<double>& logits, double& loss, DenseMatrix& grad) {
  logits.resize(side.end - side.begin);
  const auto ha = h.row(anchor);
  for (std::uint32_t x = side.begin; x < side.end; ++x) {
    logits[x - side.begin] = dot(ha, h.row(x)) / tau3;
  }
  const double lse = logsumexp(logits);
  loss += coef * lse;
  std::vector<double> anchor_grad(h.cols(), 0.0);
  for (std::uint32_t x = side.begin; x < side.end; ++x) {
    const double w = coef * std::exp(logits[x - side.begin] - lse) / tau3;
    axpy(anchor_grad, h.row(x), w);
    axpy(grad.row(x), ha, w);
  }
  axpy(grad.row(anchor), anchor_grad, 1.0);
}

}  // namespace

TermResult contrastive_reg(const DenseMatrix& student_out, NodeLayout layout,
                           std::span<const Interaction> batch, std::span<const double> omega_by_row,
                           double tau3) {
  if (!(tau3 > 0.0)) throw ConfigError("contrastive_reg: tau3 must be > 0");
  if (omega_by_row.size() != layout.total()) {
    throw ContractViolation("contrastive_reg: omega must have one entry per node");
  }
  TermResult out{0.0, DenseMatrix(student_out.rows(), student_out.cols())};
  const RowRange users{0, layout.users};
  const RowRange items{layout.users, layout.total()};
  std::vector<double> logits;
  const auto ua = user_anchors(layout, batch);
  for (std::size_t a = 0; a < ua.rows.size(); ++a) {
    const double coef = ua.counts[a] * omega_by_row[ua.rows[a]];
    if (coef == 0.0) continue;
    push_apart(student_out, ua.rows[a], users, coef, tau3, logits, out.loss, out.grad);
    push_apart(student_out, ua.rows[a], items, coef, tau3, logits, out.loss, out.grad);
  }
  const auto ia = item_anchors(layout, batch);
  for (std::size_t a = 0; a < ia.rows.size(); ++a) {
    const double coef = ia.counts[a] * omega_by_row[ia.rows[a]];
    if (coef == 0.0) continue;
    push_apart(student_out, ia.rows[a], items, coef, tau3, logits, out.loss, out.grad);
  }
  return out;
}

TermResult weight_decay(const DenseMatrix& embeddings) {
  TermResult out{frobenius_squared(embeddings), embeddings};
  for (double& v : out.grad.values()) v *= 2.0;
  return out;
}

std::vector<std::uint32_t> batch_nodes(NodeLayout layout, std::span<const Interaction> batch) {
  std::vector<std::uint32_t> rows;
  rows.reserve(2 * batch.size());
  for (const auto& p : batch) {
    rows.push_back(layout.user_row(p.user));
    rows.push_back(layout.item_row(p.item));
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

BatchGradients BatchGradients::gather(std::vector<std::uint32_t> nodes, const DenseMatrix& pred,
                                      const DenseMatrix& embed, const DenseMatrix& rec) {
  const std::size_t d = rec.cols();
  BatchGradients g{std::move(nodes), {}, {}, {}, {}};
  g.pred = DenseMatrix(g.nodes.size(), d);
  g.embed = DenseMatrix(g.nodes.size(), d);
  g.combined = DenseMatrix(g.nodes.size(), d);
  g.rec = DenseMatrix(g.nodes.size(), d);
  for (std::size_t n = 0; n < g.nodes.size(); ++n) {
    const auto row = g.nodes[n];
    for (std::size_t c = 0; c < d; ++c) {
      g.pred(n, c) = pred(row, c);
      g.embed(n, c) = embed(row, c);
      g.combined(n, c) = pred(row, c) + embed(row, c);
      g.rec(n, c) = rec(row, c);
    }
  }
  return g;
}

std::vector<double> omega_weights(const BatchGradients& grads, double epsilon) {
  const std::size_t n = grads.nodes.size();
  for (const DenseMatrix* m : {&grads.pred, &grads.embed, &grads.combined, &grads.rec}) {
    if (m->rows() != n) {
      throw ContractViolation("omega_weights: gradient buffer missing for T_2 nodes");
    }
  }
  std::vector<double> omega(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double agreement = dot(grads.combined.row(k), grads.rec.row(k));
    const double kd_overlap = dot(grads.pred.row(k), grads.embed.row(k));
    omega[k] = agreement > kd_overlap ? 1.0 - epsilon : 1.0 + epsilon;
  }
  return omega;
}

namespace {

void require_finite(double value, const char* component) {
  if (!std::isfinite(value)) {
    throw NumericError(std::string("assemble_step: non-finite ") + component);
  }
}

}  // namespace

StepResult assemble_step(const TeacherView& teacher, const StudentModel& student,
                         const LossWeights& weights, AblationToggles toggles,
                         std::span<const KdTriplet> t1, std::span<const Interaction> t2,
                         std::span<const double> fixed_omega_by_row) {
  const auto layout = student.layout();
  const auto cache = student_forward_all(student);
  const DenseMatrix& h = cache.output;

  StepResult result;
  auto& report = result.report;
  report.lambdas = {toggles.disable_l1 ? 0.0 : weights.lambda1, toggles.disable_l2 ? 0.0 : weights.lambda2,
                    toggles.disable_l3 ? 0.0 : weights.lambda3, weights.lambda4};

  auto l1 = prediction_distillation(h, teacher.readout, layout, t1, weights.tau1);
  require_finite(l1.loss, "L1");
  auto l2 = embed_kd(h, teacher.targets, layout, t2, weights.tau2);
  require_finite(l2.loss, "L2");
  auto rec = rec_loss(h, layout, t2);
  require_finite(rec.loss, "L_rec");

  if (fixed_omega_by_row.empty()) {
    const DenseMatrix zeros(h.rows(), h.cols());
    auto grads = BatchGradients::gather(batch_nodes(layout, t2), toggles.disable_l1 ? zeros : l1.grad,
                                        toggles.disable_l2 ? zeros : l2.grad, rec.grad);
    const auto omega = omega_weights(grads, weights.epsilon);
    result.omega_by_row.assign(layout.total(), 1.0);
    std::size_t low = 0;
    for (std::size_t k = 0; k < grads.nodes.size(); ++k) {
      result.omega_by_row[grads.nodes[k]] = omega[k];
      if (omega[k] < 1.0) ++low;
    }
    report.omega_nodes = grads.nodes.size();
    report.omega_low_fraction =
        grads.nodes.empty() ? 0.0 : static_cast<double>(low) / static_cast<double>(grads.nodes.size());
  } else {
    if (fixed_omega_by_row.size() != layout.total()) {
      throw ContractViolation("assemble_step: fixed omega must have one entry per node");
    }
    result.omega_by_row.assign(fixed_omega_by_row.begin(), fixed_omega_by_row.end());
  }

  auto l3 = contrastive_reg(h, layout, t2, result.omega_by_row, weights.tau3);
  require_finite(l3.loss, "L3");
  auto l4 = weight_decay(student.embeddings());
  require_finite(l4.loss, "L4");

  report.rec = rec.loss;
  report.l1 = l1.loss;
  report.l2 = l2.loss;
  report.l3 = l3.loss;
  report.l4 = l4.loss;
  report.total = rec.loss + report.lambdas[0] * l1.loss + report.lambdas[1] * l2.loss +
                 report.lambdas[2] * l3.loss + report.lambdas[3] * l4.loss;
  require_finite(report.total, "total loss");

  DenseMatrix upstream = std::move(rec.grad);
  if (report.lambdas[0] != 0.0) add_scaled(upstream, l1.grad, report.lambdas[0]);
  if (report.lambdas[1] != 0.0) add_scaled(upstream, l2.grad, report.lambdas[1]);
  if (report.lambdas[2] != 0.0) add_scaled(upstream, l3.grad, report.lambdas[2]);

  result.grads = student_backward(student, cache, upstream);
  if (report.lambdas[3] != 0.0) add_scaled(result.grads.embeddings, l4.grad, report.lambdas[3]);
  return result;
}

}  // namespace glrc
