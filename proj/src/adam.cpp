#include "glrc/adam.hpp"

#include <cmath>

#include "glrc/error.hpp"

namespace glrc {

AdamState::AdamState(std::size_t rows, std::size_t cols, AdamConfig cfg)
    : first_moment(rows, cols), second_moment(rows, cols), config(cfg) {}

void adam_step(DenseMatrix& param, const DenseMatrix& grad, AdamState& state, double lr) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols()) {
    throw InvalidShape("adam_step: gradient shape mismatch");
  }
  if (state.first_moment.rows() != param.rows() || state.first_moment.cols() != param.cols()) {
    throw InvalidShape("adam_step: state shape mismatch");
  }
  if (!grad.all_finite()) {
    throw NumericError("adam_step: non-finite gradient");
  }
  const auto& cfg = state.config;
  state.step++;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);

  auto p = param.values();
  auto g = grad.values();
  auto m = state.first_moment.values();
  auto v = state.second_moment.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

Optimizer::Optimizer(UpdateRule rule, double lr, AdamConfig config)
    : rule_(rule), lr_(lr), config_(config) {}

void Optimizer::step(std::size_t slot, DenseMatrix& param, const DenseMatrix& grad) {
  if (rule_ == UpdateRule::plain_sgd) {
    if (!grad.all_finite()) {
      throw NumericError("sgd step: non-finite gradient");
    }
    add_scaled(param, grad, -lr_);
    return;
  }
  if (states_.size() <= slot) {
    states_.resize(slot + 1);
  }
  if (states_[slot].first_moment.empty() && !param.empty()) {
    states_[slot] = AdamState(param.rows(), param.cols(), config_);
  }
  adam_step(param, grad, states_[slot], lr_);
}

}  // namespace glrc
