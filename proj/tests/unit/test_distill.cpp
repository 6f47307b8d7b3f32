#include <cmath>

#include "doctest.h"
#include "glrc/distill.hpp"
#include "glrc/error.hpp"
#include "glrc/mathops.hpp"
#include "helpers.hpp"

using namespace glrc;
using testing::numeric_gradient;
using testing::random_matrix;
using testing::relative_error;

namespace {

struct Instance {
  InteractionSet graph;
  NodeLayout layout;
  DenseMatrix student_out;
  DenseMatrix teacher_out;
  DenseMatrix targets;
  std::vector<KdTriplet> t1;
  std::vector<Interaction> t2;
  std::vector<double> omega;
};

// At most 12 nodes.
Instance random_instance(Rng& rng, std::size_t d = 3) {
  Instance in;
  in.graph = testing::random_graph(rng, 12, 0.5);
  in.layout = in.graph.layout();
  const auto n = in.graph.node_count();
  in.student_out = random_matrix(n, d, rng);
  in.teacher_out = random_matrix(n, d, rng);
  in.targets = random_matrix(n, d, rng);
  in.t1 = testing::random_t1(in.layout, 6, rng);
  in.t2 = testing::random_pairs(in.graph, 5, rng);
  for (std::size_t k = 0; k < n; ++k) in.omega.push_back(rng.uniform() < 0.5 ? 0.8 : 1.2);
  return in;
}

double naive_lse(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::exp(x);
  return std::log(s);
}

}  // namespace

TEST_SUITE("distill") {

TEST_CASE("pred_kd gradient has the closed form on 1000 samples") {
  Rng rng(1);
  std::vector<double> zs(1000), zt(1000);
  for (auto& z : zs) z = rng.uniform(-8.0, 8.0);
  for (auto& z : zt) z = rng.uniform(-8.0, 8.0);
  for (double tau : {0.5, 1.0, 3.0}) {
    const auto kd = pred_kd(zs, zt, tau);
    double worst = 0.0;
    for (std::size_t n = 0; n < zs.size(); ++n) {
      const double closed = -(1.0 / tau) * (sigmoid(zt[n] / tau) - sigmoid(zs[n] / tau));
      worst = std::max(worst, std::abs(kd.grad[n] - closed));
    }
    CHECK(worst <= 1e-12);
  }
}

TEST_CASE("pred_kd loss is binary cross entropy and its derivative matches") {
  std::vector<double> zs{0.3, -1.5, 2.0}, zt{1.0, 0.2, -0.7};
  const double tau = 2.0;
  const auto kd = pred_kd(zs, zt, tau);
  double expect = 0.0;
  for (int n = 0; n < 3; ++n) {
    const double t = 1.0 / (1.0 + std::exp(-zt[n] / tau));
    const double p = 1.0 / (1.0 + std::exp(-zs[n] / tau));
    expect -= t * std::log(p) + (1 - t) * std::log(1 - p);
  }
  CHECK(kd.loss == doctest::Approx(expect).epsilon(1e-13));
  const auto numeric = numeric_gradient(zs, [&] { return pred_kd(zs, zt, tau).loss; });
  CHECK(relative_error(kd.grad, numeric) < 1e-8);
}

TEST_CASE("pred_kd clamps saturated probabilities") {
  std::vector<double> zs{-1000.0}, zt{1000.0};
  const auto kd = pred_kd(zs, zt, 1.0);
  CHECK(std::isfinite(kd.loss));
  CHECK(kd.loss == doctest::Approx(-std::log(1e-12)));
  CHECK(kd.grad[0] == doctest::Approx(-1.0));
  CHECK_THROWS_AS(pred_kd(zs, zt, 0.0), ConfigError);
}

TEST_CASE("prediction distillation gradient") {
  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng);
    const double tau = rng.uniform(0.5, 2.0);
    auto f = [&] { return prediction_distillation(in.student_out, in.teacher_out, in.layout, in.t1, tau).loss; };
    const auto r = prediction_distillation(in.student_out, in.teacher_out, in.layout, in.t1, tau);
    CHECK(relative_error(r.grad.values(), numeric_gradient(in.student_out.values(), f)) < 1e-6);
  }
}

TEST_CASE("embedding distillation value matches a direct evaluation") {
  Rng rng(3);
  auto in = random_instance(rng);
  const double tau = 0.7;
  double expect = 0.0;
  auto side_term = [&](std::uint32_t anchor, std::uint32_t begin, std::uint32_t end) {
    std::vector<double> logits;
    for (std::uint32_t x = begin; x < end; ++x) logits.push_back(cosine(in.student_out.row(x), in.targets.row(anchor)) / tau);
    return naive_lse(logits) - cosine(in.student_out.row(anchor), in.targets.row(anchor)) / tau;
  };
  for (const auto& p : in.t2) {
    expect += side_term(in.layout.user_row(p.user), 0, in.layout.users);
    expect += side_term(in.layout.item_row(p.item), in.layout.users, in.layout.total());
  }
  CHECK(embed_kd(in.student_out, in.targets, in.layout, in.t2, tau).loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("embedding distillation gradient") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng);
    const double tau = rng.uniform(0.3, 2.0);
    auto f = [&] { return embed_kd(in.student_out, in.targets, in.layout, in.t2, tau).loss; };
    const auto r = embed_kd(in.student_out, in.targets, in.layout, in.t2, tau);
    CHECK(relative_error(r.grad.values(), numeric_gradient(in.student_out.values(), f)) < 1e-6);
  }
}

TEST_CASE("embedding distillation rejects zero rows") {
  Rng rng(5);
  auto in = random_instance(rng);
  in.student_out.row(0)[0] = in.student_out.row(0)[1] = in.student_out.row(0)[2] = 0.0;
  CHECK_THROWS_AS(embed_kd(in.student_out, in.targets, in.layout, in.t2, 1.0), DegenerateVector);
}

TEST_CASE("contrastive regularization value matches a direct evaluation") {
  Rng rng(6);
  auto in = random_instance(rng);
  const double tau = 0.9;
  double expect = 0.0;
  auto lse_over = [&](std::uint32_t a, std::uint32_t begin, std::uint32_t end) {
    std::vector<double> logits;
    for (std::uint32_t x = begin; x < end; ++x) logits.push_back(dot(in.student_out.row(a), in.student_out.row(x)) / tau);
    return naive_lse(logits);
  };
  for (const auto& p : in.t2) {
    const auto u = in.layout.user_row(p.user);
    const auto i = in.layout.item_row(p.item);
    expect += in.omega[u] * (lse_over(u, 0, in.layout.users) + lse_over(u, in.layout.users, in.layout.total()));
    expect += in.omega[i] * lse_over(i, in.layout.users, in.layout.total());
  }
  CHECK(contrastive_reg(in.student_out, in.layout, in.t2, in.omega, tau).loss == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("contrastive regularization gradient") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng);
    const double tau = rng.uniform(0.5, 2.0);
    auto f = [&] { return contrastive_reg(in.student_out, in.layout, in.t2, in.omega, tau).loss; };
    const auto r = contrastive_reg(in.student_out, in.layout, in.t2, in.omega, tau);
    CHECK(relative_error(r.grad.values(), numeric_gradient(in.student_out.values(), f)) < 1e-6);
  }
}

TEST_CASE("omega vector must cover every node") {
  Rng rng(8);
  auto in = random_instance(rng);
  in.omega.pop_back();
  CHECK_THROWS_AS(contrastive_reg(in.student_out, in.layout, in.t2, in.omega, 1.0), ContractViolation);
}

TEST_CASE("recommendation loss and weight decay gradients") {
  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng);
    auto f = [&] { return rec_loss(in.student_out, in.layout, in.t2).loss; };
    const auto r = rec_loss(in.student_out, in.layout, in.t2);
    CHECK(relative_error(r.grad.values(), numeric_gradient(in.student_out.values(), f)) < 1e-8);

    auto g = [&] { return weight_decay(in.student_out).loss; };
    const auto w = weight_decay(in.student_out);
    CHECK(relative_error(w.grad.values(), numeric_gradient(in.student_out.values(), g)) < 1e-8);
  }
}

TEST_CASE("batch nodes are sorted and unique") {
  NodeLayout layout{3, 4};
  std::vector<Interaction> t2{{2, 1}, {0, 1}, {2, 3}};
  CHECK(batch_nodes(layout, t2) == std::vector<std::uint32_t>{0, 2, 4, 6});
}

TEST_CASE("omega rule on constructed gradients") {
  const double eps = 0.2;
  auto one_node = [&](std::vector<double> g1, std::vector<double> g2, std::vector<double> grec) {
    const std::size_t d = g1.size();
    DenseMatrix p(1, d, g1), e(1, d, g2), r(1, d, grec);
    return omega_weights(BatchGradients::gather({0}, p, e, r), eps)[0];
  };
  // <g1+g2, grec> = 2 > <g1, g2> = 0
  CHECK(one_node({1, 0}, {0, 1}, {1, 1}) == 1.0 - eps);
  // <g1+g2, grec> = -2 < 0
  CHECK(one_node({1, 0}, {0, 1}, {-1, -1}) == 1.0 + eps);
  // tie goes to 1 + eps
  CHECK(one_node({1, 0}, {0, 1}, {1, -1}) == 1.0 + eps);
  // everything zero: tie
  CHECK(one_node({0, 0}, {0, 0}, {0, 0}) == 1.0 + eps);
  // parallel KD gradients dominate
  CHECK(one_node({2, 0}, {3, 0}, {0.1, 0}) == 1.0 + eps);
  // node absent from T1: g1 = 0, so the rule compares <g2, grec> with 0
  CHECK(one_node({0, 0}, {1, 2}, {1, 0}) == 1.0 - eps);
  CHECK(one_node({0, 0}, {1, 2}, {-1, 0}) == 1.0 + eps);
  // zero rec gradient with anti-aligned KD terms
  CHECK(one_node({1, 0}, {-1, 0}, {0, 0}) == 1.0 - eps);

  // Exhaustive sign patterns on one coordinate; always exactly one of the two values.
  for (double a : {-1.0, 0.0, 1.0})
    for (double b : {-1.0, 0.0, 1.0})
      for (double c : {-1.0, 0.0, 1.0}) {
        const double w = one_node({a}, {b}, {c});
        CHECK(w == ((a + b) * c > a * b ? 1.0 - eps : 1.0 + eps));
      }
}

TEST_CASE("omega buffers must be complete") {
  BatchGradients g;
  g.nodes = {0, 1};
  g.pred = DenseMatrix(2, 2);
  g.embed = DenseMatrix(1, 2);
  g.combined = DenseMatrix(2, 2);
  g.rec = DenseMatrix(2, 2);
  CHECK_THROWS_AS(omega_weights(g, 0.2), ContractViolation);
}

TEST_CASE("assemble_step derives omega from leaf gradients and ignores disabled terms") {
  Rng rng(10);
  auto in = random_instance(rng, 4);
  StudentModel student(in.layout, StudentConfig{4, 2, 0.01}, rng);
  LossWeights w;
  const TeacherView view{in.teacher_out, in.targets};
  // Keep one node out of T1 entirely.
  for (auto& t : in.t1) t.user = 0;
  const auto step = assemble_step(view, student, w, {}, in.t1, in.t2);
  const auto h = student_forward_all(student).output;
  const auto g1 = prediction_distillation(h, in.teacher_out, in.layout, in.t1, w.tau1).grad;
  const auto g2 = embed_kd(h, in.targets, in.layout, in.t2, w.tau2).grad;
  const auto gr = rec_loss(h, in.layout, in.t2).grad;
  const auto nodes = batch_nodes(in.layout, in.t2);
  const auto expect = omega_weights(BatchGradients::gather(nodes, g1, g2, gr), w.epsilon);
  for (std::size_t k = 0; k < nodes.size(); ++k) CHECK(step.omega_by_row[nodes[k]] == expect[k]);
  CHECK(step.report.omega_nodes == nodes.size());

  AblationToggles off;
  off.disable_l1 = true;
  const auto ablated = assemble_step(view, student, w, off, in.t1, in.t2);
  const DenseMatrix zero(h.rows(), h.cols());
  const auto expect_off = omega_weights(BatchGradients::gather(nodes, zero, g2, gr), w.epsilon);
  for (std::size_t k = 0; k < nodes.size(); ++k) CHECK(ablated.omega_by_row[nodes[k]] == expect_off[k]);
  CHECK(ablated.report.lambdas[0] == 0.0);
  CHECK(ablated.report.l1 == step.report.l1);
}

TEST_CASE("composite objective gradient through the MLP") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto in = random_instance(rng, 3);
    StudentModel student(in.layout, StudentConfig{3, 2, 0.01}, rng);
    LossWeights w;
    w.lambda1 = rng.uniform(0.1, 2.0);
    w.lambda2 = rng.uniform(0.1, 2.0);
    w.lambda3 = rng.uniform(0.1, 2.0);
    w.lambda4 = rng.uniform(0.0, 0.5);
    w.tau1 = rng.uniform(0.5, 2.0);
    w.tau2 = rng.uniform(0.5, 2.0);
    w.tau3 = rng.uniform(0.5, 2.0);
    AblationToggles toggles;
    toggles.disable_l3 = trial % 4 == 3;
    const TeacherView view{in.teacher_out, in.targets};
    auto f = [&] { return assemble_step(view, student, w, toggles, in.t1, in.t2, in.omega).report.total; };
    const auto step = assemble_step(view, student, w, toggles, in.t1, in.t2, in.omega);
    CHECK(relative_error(step.grads.embeddings.values(), numeric_gradient(student.mutable_embeddings().values(), f)) <
          1e-5);
    for (std::size_t l = 0; l < 2; ++l) {
      CHECK(relative_error(step.grads.weights[l].values(), numeric_gradient(student.mutable_weight(l).values(), f)) <
            1e-5);
    }
  }
}

TEST_CASE("loss weight validation") {
  LossWeights w;
  CHECK_NOTHROW(w.validate());
  w.tau2 = 0.0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w = {};
  w.epsilon = 1.0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
  w = {};
  w.lambda3 = -1.0;
  CHECK_THROWS_AS(w.validate(), ConfigError);
}

}
