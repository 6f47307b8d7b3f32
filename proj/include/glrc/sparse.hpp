#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "glrc/matrix.hpp"

namespace glrc {

struct SparseEntry {
  std::uint32_t row;
  std::uint32_t col;
  double value;
};

/// Square CSR matrix over the joint user+item node space.
///
/// Invariants (checked by from_entries): structural symmetry, column
/// indices strictly increasing within each row, values positive and finite.
class SparseAdjacency {
 public:
  SparseAdjacency() = default;

  /// Builds from unordered entries. Duplicate coordinates are rejected.
  static SparseAdjacency from_entries(std::size_t dim, std::vector<SparseEntry> entries);

  std::size_t dim() const { return dim_; }
  std::size_t nnz() const { return col_indices_.size(); }

  const std::vector<std::size_t>& row_offsets() const { return row_offsets_; }
  const std::vector<std::uint32_t>& col_indices() const { return col_indices_; }
  const std::vector<double>& edge_values() const { return edge_values_; }

  std::optional<double> at(std::size_t row, std::size_t col) const;

  DenseMatrix to_dense() const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::uint32_t> col_indices_;
  std::vector<double> edge_values_;
};

/// out = adj * x. Parallel over output rows.
DenseMatrix spmm(const SparseAdjacency& adj, const DenseMatrix& x);

}  // namespace glrc
