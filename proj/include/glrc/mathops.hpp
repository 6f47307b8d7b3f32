#pragma once

#include <cmath>
#include <span>

namespace glrc {

/// log(sum(exp(values))) with max subtraction; throws InvalidInput on empty input.
double logsumexp(std::span<const double> values);

/// Cosine similarity clamped to [-1, 1]; throws DegenerateVector on a zero-norm input.
double cosine(std::span<const double> u, std::span<const double> v);

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

}  // namespace glrc
