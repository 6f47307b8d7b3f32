#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "glrc/adam.hpp"
#include "glrc/error.hpp"
#include "glrc/mathops.hpp"
#include "glrc/parallel.hpp"
#include "glrc/sparse.hpp"
#include "helpers.hpp"

using namespace glrc;

TEST_SUITE("numkit") {

TEST_CASE("rng is reproducible and split streams do not depend on parent position") {
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) CHECK(a.next_u64() == b.next_u64());

  Rng fresh(42);
  Rng advanced(42);
  for (int k = 0; k < 17; ++k) advanced.next_u64();
  Rng s1 = fresh.split(3), s2 = advanced.split(3);
  for (int k = 0; k < 10; ++k) CHECK(s1.next_u64() == s2.next_u64());
  CHECK(fresh.split(3).next_u64() != fresh.split(4).next_u64());
}

TEST_CASE("rng uniform and below stay in range") {
  Rng r(7);
  std::vector<int> counts(7, 0);
  for (int k = 0; k < 70000; ++k) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    ++counts[r.below(7)];
  }
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);
  CHECK_THROWS_AS(r.below(0), InvalidInput);
}

TEST_CASE("xavier bounds and zero dimensions") {
  Rng r(1);
  const auto m = xavier_init(30, 10, r);
  const double bound = std::sqrt(6.0 / 40.0);
  for (double v : m.values()) CHECK(std::abs(v) <= bound);
  CHECK_THROWS_AS(xavier_init(0, 4, r), InvalidShape);
  CHECK_THROWS_AS(xavier_init(4, 0, r), InvalidShape);
}

TEST_CASE("logsumexp matches the naive sum and survives large inputs") {
  std::vector<double> v{0.3, -1.2, 2.5, 0.0};
  double naive = 0.0;
  for (double x : v) naive += std::exp(x);
  CHECK(logsumexp(v) == doctest::Approx(std::log(naive)).epsilon(1e-14));
  std::vector<double> big{1000.0, 1000.0};
  CHECK(logsumexp(big) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(logsumexp(std::span<const double>{}), InvalidInput);
}

TEST_CASE("cosine clamps and rejects zero vectors") {
  std::vector<double> a{1.0, 2.0, 3.0}, z{0.0, 0.0, 0.0};
  CHECK(cosine(a, a) <= 1.0);
  CHECK(cosine(a, a) == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine(a, z), DegenerateVector);
}

TEST_CASE("sigmoid and softplus are stable at the extremes") {
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(std::isfinite(softplus(800.0)));
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("spmm equals the dense product") {
  Rng r(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + r.below(30);
    std::vector<SparseEntry> entries;
    for (std::uint32_t i = 0; i < n; ++i) {
      for (std::uint32_t j = i; j < n; ++j) {
        if (r.uniform() < 0.3) {
          const double w = r.uniform(0.1, 2.0);
          entries.push_back({i, j, w});
          if (i != j) entries.push_back({j, i, w});
        }
      }
    }
    const auto adj = SparseAdjacency::from_entries(n, entries);
    const auto x = testing::random_matrix(n, 5, r);
    CHECK(max_abs_diff(spmm(adj, x), matmul(adj.to_dense(), x)) < 1e-13);
  }
}

TEST_CASE("sparse construction validates its input") {
  CHECK_THROWS_AS(SparseAdjacency::from_entries(2, {{0, 1, 1.0}}), InvalidInput);
  CHECK_THROWS_AS(SparseAdjacency::from_entries(2, {{0, 2, 1.0}, {2, 0, 1.0}}), InvalidShape);
  CHECK_THROWS_AS(SparseAdjacency::from_entries(2, {{0, 0, -1.0}}), InvalidInput);
  CHECK_THROWS_AS(SparseAdjacency::from_entries(2, {{0, 0, 1.0}, {0, 0, 1.0}}), InvalidInput);
  const auto ok = SparseAdjacency::from_entries(2, {{1, 0, 0.5}, {0, 1, 0.5}});
  CHECK(ok.at(0, 1).value() == 0.5);
  CHECK_FALSE(ok.at(0, 0).has_value());
  const auto a = SparseAdjacency::from_entries(3, {});
  CHECK_THROWS_AS(spmm(a, DenseMatrix(2, 2)), InvalidShape);
}

TEST_CASE("adam step matches a hand computation") {
  DenseMatrix p(1, 2, std::vector<double>{1.0, -1.0});
  DenseMatrix g(1, 2, std::vector<double>{0.5, -2.0});
  AdamState s(1, 2);
  adam_step(p, g, s, 0.1);
  // First bias-corrected step moves each coordinate by lr * sign(g).
  CHECK(p(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p(0, 1) == doctest::Approx(-1.0 + 0.1 * 2.0 / (2.0 + 1e-8)).epsilon(1e-12));
  adam_step(p, g, s, 0.1);
  const double m = 0.9 * 0.05 + 0.1 * 0.5, v = 0.999 * 0.00025 + 0.001 * 0.25;
  const double step = 0.1 * (m / (1 - 0.81)) / (std::sqrt(v / (1 - 0.999 * 0.999)) + 1e-8);
  CHECK(p(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8) - step).epsilon(1e-12));
  CHECK(s.step == 2);
}

TEST_CASE("adam rejects non-finite gradients without mutating") {
  DenseMatrix p(1, 2, std::vector<double>{1.0, 2.0});
  DenseMatrix g(1, 2, std::vector<double>{0.5, std::numeric_limits<double>::quiet_NaN()});
  AdamState s(1, 2);
  const auto before = p;
  CHECK_THROWS_AS(adam_step(p, g, s, 0.1), NumericError);
  CHECK(p == before);
  CHECK(s.step == 0);
  CHECK(frobenius_squared(s.first_moment) == 0.0);
}

TEST_CASE("optimizer keeps separate state per slot and supports plain sgd") {
  Optimizer sgd(UpdateRule::plain_sgd, 0.5);
  DenseMatrix p(1, 1, 2.0), g(1, 1, 1.0);
  sgd.step(0, p, g);
  CHECK(p(0, 0) == 1.5);

  Optimizer adam(UpdateRule::adam, 0.1);
  DenseMatrix a(1, 1, 0.0), b(1, 1, 0.0);
  adam.step(0, a, g);
  adam.step(1, b, g);
  CHECK(a(0, 0) == b(0, 0));
}

TEST_CASE("parallel_for covers every index exactly once") {
  std::vector<int> hit(10007, 0);
  parallel_for(hit.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) ++hit[k];
  }, 1);
  CHECK(std::accumulate(hit.begin(), hit.end(), 0) == 10007);
  CHECK(*std::min_element(hit.begin(), hit.end()) == 1);
}

}
