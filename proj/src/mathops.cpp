#include "glrc/mathops.hpp"

#include <algorithm>

#include "glrc/error.hpp"
#include "glrc/matrix.hpp"

namespace glrc {

double logsumexp(std::span<const double> values) {
  if (values.empty()) {
    throw InvalidInput("logsumexp: empty input");
  }
  const double peak = *std::max_element(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) {
    sum += std::exp(v - peak);
  }
  return peak + std::log(sum);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  if (nu == 0.0 || nv == 0.0) {
    throw DegenerateVector("cosine: zero-norm vector");
  }
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

}  // namespace glrc
