#include "iae/adam.hpp"

#include <cmath>
#include <string>

#include "iae/error.hpp"

namespace iae {

AdamState::AdamState(AdamConfig config, std::span<const Tensor> params) : config_(config) {
  if (!(config.learning_rate > 0.0) || config.beta1 < 0.0 || config.beta1 >= 1.0 ||
      config.beta2 < 0.0 || config.beta2 >= 1.0 || !(config.epsilon > 0.0)) {
    throw InputError("invalid Adam hyperparameters");
  }
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Tensor& p : params) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

void AdamState::apply(std::span<Tensor> params, std::span<const Tensor> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw InputError("adam: expected " + std::to_string(m_.size()) + " tensors, got " +
                     std::to_string(params.size()) + " params / " +
                     std::to_string(grads.size()) + " grads");
  }
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t].same_shape(m_[t]) || !grads[t].same_shape(m_[t])) {
      throw InputError("adam: shape mismatch on tensor " + std::to_string(t) + ": moments " +
                       m_[t].shape_string() + ", param " + params[t].shape_string() +
                       ", grad " + grads[t].shape_string());
    }
    for (std::size_t i = 0; i < grads[t].size(); ++i) {
      if (!std::isfinite(grads[t][i])) {
        throw NumericError("adam: non-finite gradient in tensor " + std::to_string(t) +
                           " at element " + std::to_string(i) + " (step " +
                           std::to_string(step_ + 1) + ")");
      }
    }
  }

  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double step = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(b1, step);
  const double correction2 = 1.0 - std::pow(b2, step);
  for (std::size_t t = 0; t < params.size(); ++t) {
    Tensor& p = params[t];
    const Tensor& g = grads[t];
    Tensor& m = m_[t];
    Tensor& v = v_[t];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace iae
