#include "glrc/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glrc/error.hpp"
#include "glrc/parallel.hpp"

namespace glrc {

SparseAdjacency SparseAdjacency::from_entries(std::size_t dim, std::vector<SparseEntry> entries) {
  for (const auto& e : entries) {
    if (e.row >= dim || e.col >= dim) {
      throw InvalidShape("SparseAdjacency: entry (" + std::to_string(e.row) + "," +
                         std::to_string(e.col) + ") outside dim " + std::to_string(dim));
    }
    if (!(e.value > 0.0) || !std::isfinite(e.value)) {
      throw InvalidInput("SparseAdjacency: values must be positive and finite");
    }
  }
  std::sort(entries.begin(), entries.end(), [](const SparseEntry& a, const SparseEntry& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  SparseAdjacency adj;
  adj.dim_ = dim;
  adj.row_offsets_.assign(dim + 1, 0);
  adj.col_indices_.reserve(entries.size());
  adj.edge_values_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col) {
      throw InvalidInput("SparseAdjacency: duplicate entry");
    }
    adj.row_offsets_[entries[i].row + 1]++;
    adj.col_indices_.push_back(entries[i].col);
    adj.edge_values_.push_back(entries[i].value);
  }
  for (std::size_t r = 0; r < dim; ++r) {
    adj.row_offsets_[r + 1] += adj.row_offsets_[r];
  }
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t k = adj.row_offsets_[r]; k < adj.row_offsets_[r + 1]; ++k) {
      if (!adj.at(adj.col_indices_[k], r)) {
        throw InvalidInput("SparseAdjacency: pattern is not symmetric");
      }
    }
  }
  return adj;
}

std::optional<double> SparseAdjacency::at(std::size_t row, std::size_t col) const {
  const auto begin = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row]);
  const auto end = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[row + 1]);
  const auto it = std::lower_bound(begin, end, static_cast<std::uint32_t>(col));
  if (it == end || *it != col) return std::nullopt;
  return edge_values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

DenseMatrix SparseAdjacency::to_dense() const {
  DenseMatrix d(dim_, dim_);
  for (std::size_t r = 0; r < dim_; ++r) {
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      d(r, col_indices_[k]) = edge_values_[k];
    }
  }
  return d;
}

DenseMatrix spmm(const SparseAdjacency& adj, const DenseMatrix& x) {
  if (adj.dim() != x.rows()) {
    throw InvalidShape("spmm: adjacency dim " + std::to_string(adj.dim()) + " vs " +
                       std::to_string(x.rows()) + " rows");
  }
  DenseMatrix out(x.rows(), x.cols());
  const auto& offsets = adj.row_offsets();
  const auto& cols = adj.col_indices();
  const auto& vals = adj.edge_values();
  parallel_for(adj.dim(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      auto dst = out.row(r);
      for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
        axpy(dst, x.row(cols[k]), vals[k]);
      }
    }
  }, 256);
  return out;
}

}  // namespace glrc
