#include <cmath>

#include "doctest.h"
#include "glrc/error.hpp"
#include "glrc/mathops.hpp"
#include "glrc/teacher.hpp"
#include "helpers.hpp"

using namespace glrc;

namespace {

DenseMatrix dense_readout(const DenseMatrix& a, const DenseMatrix& h, std::size_t layers, bool average) {
  DenseMatrix power = h, sum = h;
  for (std::size_t l = 1; l <= layers; ++l) {
    power = matmul(a, power);
    add_scaled(sum, power, 1.0);
  }
  if (average) {
    for (double& v : sum.values()) v /= static_cast<double>(layers + 1);
  }
  return sum;
}

}  // namespace

TEST_SUITE("teacher") {

TEST_CASE("normalized adjacency matches the dense oracle") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = testing::random_graph(rng, 40);
    CHECK(max_abs_diff(normalize_adjacency(g).to_dense(), testing::dense_normalized(g)) < 1e-15);
  }
}

TEST_CASE("readout equals the dense power sum on random graphs up to 64 nodes") {
  Rng rng(2);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = testing::random_graph(rng, 64, rng.uniform(0.05, 0.6));
    const std::uint32_t layers = 1 + static_cast<std::uint32_t>(rng.below(4));
    const bool average = trial % 3 == 0;
    const auto h = testing::random_matrix(g.node_count(), 4, rng);
    TeacherModel model(g, TeacherConfig{4, layers, average}, h);
    model.propagate();
    const auto oracle = dense_readout(testing::dense_normalized(g), h, layers, average);
    worst = std::max(worst, max_abs_diff(model.readout(), oracle));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("layers are the successive powers") {
  Rng rng(3);
  const auto g = testing::random_graph(rng, 20);
  const auto h = testing::random_matrix(g.node_count(), 3, rng);
  TeacherModel model(g, TeacherConfig{3, 3, false}, h);
  model.propagate();
  const auto a = testing::dense_normalized(g);
  REQUIRE(model.layers().size() == 4);
  DenseMatrix p = h;
  for (std::size_t l = 0; l < 4; ++l) {
    CHECK(max_abs_diff(model.layers()[l], p) < 1e-12);
    p = matmul(a, p);
  }
}

TEST_CASE("stale cache is a contract violation") {
  Rng rng(4);
  const auto g = testing::random_graph(rng, 10);
  TeacherModel model(g, TeacherConfig{2, 2, false}, rng);
  CHECK_THROWS_AS(model.readout(), ContractViolation);
  model.propagate();
  CHECK_NOTHROW(model.readout());
  model.mutable_embeddings()(0, 0) += 1.0;
  CHECK_FALSE(model.propagated());
  CHECK_THROWS_AS(model.layers(), ContractViolation);
}

TEST_CASE("backpropagation equals walk enumeration") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = testing::random_graph(rng, 10, 0.4);
    const std::uint32_t layers = 1 + static_cast<std::uint32_t>(rng.below(3));
    const auto n = g.node_count();
    TeacherModel model(g, TeacherConfig{2, layers, false}, testing::random_matrix(n, 2, rng));
    const auto upstream = testing::random_matrix(n, 2, rng);
    const auto grad = model.backpropagate(upstream);

    // dL/dH_bar[a] = sum_l sum_b (A^l)[b][a] g[b]; walks from b to a.
    const auto a_dense = testing::dense_normalized(g);
    DenseMatrix oracle(n, 2);
    for (std::size_t b = 0; b < n; ++b) {
      std::vector<double> reach(n, 0.0);
      for (std::size_t l = 0; l <= layers; ++l) testing::walk_weights(a_dense, b, l, 1.0, reach);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t c = 0; c < 2; ++c) oracle(a, c) += reach[a] * upstream(b, c);
    }
    CHECK(max_abs_diff(grad, oracle) < 1e-8);
  }
}

TEST_CASE("bpr loss value and gradient") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testing::random_graph(rng, 12, 0.5);
    const auto layout = g.layout();
    DenseMatrix out = testing::random_matrix(g.node_count(), 3, rng);
    std::vector<BprTriplet> triplets;
    for (int k = 0; k < 6; ++k) {
      triplets.push_back({static_cast<std::uint32_t>(rng.below(layout.users)),
                          static_cast<std::uint32_t>(rng.below(layout.items)),
                          static_cast<std::uint32_t>(rng.below(layout.items))});
    }
    const auto result = bpr_loss(out, layout, triplets);
    double expect = 0.0;
    for (const auto& t : triplets) {
      const double z = dot(out.row(t.user), out.row(layout.item_row(t.positive))) -
                       dot(out.row(t.user), out.row(layout.item_row(t.negative)));
      expect += -std::log(sigmoid(z));
    }
    CHECK(result.loss == doctest::Approx(expect).epsilon(1e-12));
    const auto numeric =
        testing::numeric_gradient(out.values(), [&] { return bpr_loss(out, layout, triplets).loss; });
    CHECK(testing::relative_error(result.grad.values(), numeric) < 1e-6);
  }
}

TEST_CASE("teacher objective gradient through propagation") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = testing::random_graph(rng, 12, 0.5);
    TeacherModel model(g, TeacherConfig{3, 2, trial % 2 == 1}, rng);
    std::vector<BprTriplet> triplets;
    for (int k = 0; k < 8; ++k) {
      const auto& e = g.edges()[rng.below(g.size())];
      triplets.push_back({e.user, e.item, static_cast<std::uint32_t>(rng.below(g.item_count()))});
    }
    const double decay = 0.05;
    const auto analytic = teacher_objective(model, triplets, decay);
    // Writes through the span bypass staleness tracking, so re-mark before each evaluation.
    const auto numeric = testing::numeric_gradient(model.mutable_embeddings().values(), [&] {
      model.mutable_embeddings();
      return teacher_objective(model, triplets, decay).loss;
    });
    CHECK(testing::relative_error(analytic.grad.values(), numeric) < 1e-6);
  }
}

TEST_CASE("teacher step refuses a non-finite loss") {
  InteractionSet g(1, 2, {{0, 0}});
  DenseMatrix h(3, 2, 0.0);
  h(0, 0) = 1e200;
  h(1, 0) = -1e200;
  h(2, 0) = 1e200;
  TeacherModel model(g, TeacherConfig{2, 1, false}, h);
  const auto before = model.embeddings();
  Optimizer opt(UpdateRule::adam, 0.1);
  std::vector<BprTriplet> t{{0, 0, 1}};
  CHECK_THROWS_AS(teacher_bpr_step(model, t, 0.0, opt), NumericError);
  CHECK(model.embeddings() == before);
}

TEST_CASE("teacher step lowers the objective") {
  Rng rng(8);
  const auto g = testing::random_graph(rng, 30, 0.3);
  TeacherModel model(g, TeacherConfig{8, 2, false}, rng);
  const auto triplets = sample_bpr(g, 64, rng);
  Optimizer opt(UpdateRule::plain_sgd, 0.01);
  const double before = teacher_objective(model, triplets, 1e-4).loss;
  teacher_bpr_step(model, triplets, 1e-4, opt);
  CHECK(teacher_objective(model, triplets, 1e-4).loss < before);
}

TEST_CASE("distillation targets sum layers two and up") {
  Rng rng(9);
  const auto g = testing::random_graph(rng, 16);
  TeacherModel model(g, TeacherConfig{3, 3, false}, rng);
  model.propagate();
  auto expect = model.layers()[2];
  add_scaled(expect, model.layers()[3], 1.0);
  CHECK(max_abs_diff(teacher_targets(model), expect) == 0.0);

  TeacherModel shallow(g, TeacherConfig{3, 1, false}, rng);
  shallow.propagate();
  CHECK_THROWS_AS(teacher_targets(shallow), ConfigError);
}

}
