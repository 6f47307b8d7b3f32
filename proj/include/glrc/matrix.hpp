#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glrc/rng.hpp"

namespace glrc {

/// Row-major dense matrix of doubles. Rows are node embeddings throughout
/// the library, so row access is the hot path.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Uniform Xavier/Glorot initialization in [-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))].
DenseMatrix xavier_init(std::size_t rows, std::size_t cols, Rng& rng);

double dot(std::span<const double> a, std::span<const double> b);

/// dst += scale * src (same shape).
void add_scaled(DenseMatrix& dst, const DenseMatrix& src, double scale);
void axpy(std::span<double> dst, std::span<const double> src, double scale);

double frobenius_squared(const DenseMatrix& m);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);

/// Dense product a * b.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace glrc
