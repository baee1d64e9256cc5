#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "iae/tensor.hpp"

namespace iae {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Moment accumulators for a list of parameter tensors, one slot per tensor.
class AdamState {
 public:
  AdamState() = default;
  AdamState(AdamConfig config, std::span<const Tensor> params);

  const AdamConfig& config() const { return config_; }
  std::uint64_t step() const { return step_; }
  const std::vector<Tensor>& first_moment() const { return m_; }
  const std::vector<Tensor>& second_moment() const { return v_; }

  // One bias-corrected Adam update of every tensor in `params` using the
  // matching entry of `grads`. Throws NumericError on a non-finite gradient
  // (parameters are left untouched in that case).
  void apply(std::span<Tensor> params, std::span<const Tensor> grads);

 private:
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace iae
