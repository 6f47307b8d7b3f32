#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "glrc/dataset.hpp"
#include "glrc/matrix.hpp"
#include "glrc/rng.hpp"

namespace glrc {

struct StudentConfig {
  std::uint32_t dim = 32;
  std::uint32_t layers = 2;
  double leaky_slope = 0.01;
};

/// Residual MLP student: h = FC^L'(h_bar) with FC(x) = leaky(W x) + x and
/// no bias. The same stack serves user and item rows.
class StudentModel {
 public:
  StudentModel(NodeLayout layout, StudentConfig config, Rng& init_rng);
  StudentModel(NodeLayout layout, StudentConfig config, DenseMatrix embeddings,
               std::vector<DenseMatrix> weights);

  const DenseMatrix& embeddings() const { return embeddings_; }
  const std::vector<DenseMatrix>& weights() const { return weights_; }
  DenseMatrix& mutable_embeddings();
  DenseMatrix& mutable_weight(std::size_t layer);

  const StudentConfig& config() const { return config_; }
  NodeLayout layout() const { return layout_; }
  /// Bumped on every mutable access; forward caches record it.
  std::uint64_t version() const { return version_; }

 private:
  NodeLayout layout_;
  StudentConfig config_;
  DenseMatrix embeddings_;
  std::vector<DenseMatrix> weights_;
  std::uint64_t version_ = 0;
};

/// Activations kept for the backward pass. inputs[l] feeds layer l,
/// preacts[l] = inputs[l] * W_l^T.
struct StudentCache {
  std::vector<std::uint32_t> nodes;
  std::vector<DenseMatrix> inputs;
  std::vector<DenseMatrix> preacts;
  DenseMatrix output;
  std::uint64_t model_version = 0;
};

StudentCache student_forward(const StudentModel& model, std::span<const std::uint32_t> nodes);
/// Forward over every node row, keeping the cache.
StudentCache student_forward_all(const StudentModel& model);

/// Output embeddings for every node, computed in row chunks without a cache.
DenseMatrix student_embed_all(const StudentModel& model, std::size_t chunk_rows = 8192);

struct StudentGrads {
  DenseMatrix embeddings;
  std::vector<DenseMatrix> weights;
};

/// Exact reverse of the forward pass. `upstream` has one row per cached
/// node. Throws ContractViolation if the cache predates a model mutation.
StudentGrads student_backward(const StudentModel& model, const StudentCache& cache,
                              const DenseMatrix& upstream);

inline double score(std::span<const double> a, std::span<const double> b) { return dot(a, b); }

}  // namespace glrc
