#include "glrc/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glrc/error.hpp"

namespace glrc {

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    throw InvalidShape("DenseMatrix: " + std::to_string(values_.size()) + " values for " +
                       std::to_string(rows_) + "x" + std::to_string(cols_));
  }
}

void DenseMatrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

bool DenseMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) {
    throw InvalidShape("xavier_init: zero dimension");
  }
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) {
    v = rng.uniform(-bound, bound);
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a[i] * b[i];
  }
  return s;
}

void axpy(std::span<double> dst, std::span<const double> src, double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) {
    dst[i] += scale * src[i];
  }
}

void add_scaled(DenseMatrix& dst, const DenseMatrix& src, double scale) {
  if (dst.rows() != src.rows() || dst.cols() != src.cols()) {
    throw InvalidShape("add_scaled: shape mismatch");
  }
  axpy(dst.values(), src.values(), scale);
}

double frobenius_squared(const DenseMatrix& m) { return dot(m.values(), m.values()); }

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw InvalidShape("max_abs_diff: shape mismatch");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a.values()[i] - b.values()[i]));
  }
  return worst;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw InvalidShape("matmul: inner dimension mismatch");
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto dst = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      axpy(dst, b.row(k), a(i, k));
    }
  }
  return out;
}

}  // namespace glrc
