#pragma once

#include <cstdint>
#include <vector>

#include "glrc/matrix.hpp"

namespace glrc {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  DenseMatrix first_moment;
  DenseMatrix second_moment;
  std::uint64_t step = 0;
  AdamConfig config;

  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols, AdamConfig cfg = {});
};

/// Bias-corrected Adam update. A non-finite gradient leaves both param and
/// state untouched and throws NumericError.
void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr);

enum class UpdateRule { adam, plain_sgd };

/// Holds one AdamState per parameter slot so a model's tensors can be
/// stepped by index.
class Optimizer {
 public:
  Optimizer(UpdateRule rule, double lr, AdamConfig config = {});

  void step(std::size_t slot, DenseMatrix& param, const DenseMatrix& grad);

  UpdateRule rule() const { return rule_; }
  double learning_rate() const { return lr_; }

 private:
  UpdateRule rule_;
  double lr_;
  AdamConfig config_;
  std::vector<AdamState> states_;
};

}  // namespace glrc
