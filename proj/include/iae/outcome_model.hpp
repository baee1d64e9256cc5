#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iae/tensor.hpp"

namespace iae {

// Anything that maps (context, treatment) to an expected outcome: a trained
// network f(x, T) = h(Phi(x), T) or the closed-form ground truth m_i(x).
// Treatment indices are 1-based throughout (T_1 .. T_n, T_i = i - 1 clicks).
class OutcomeModel {
 public:
  virtual ~OutcomeModel() = default;

  virtual std::size_t treatments() const = 0;
  virtual std::size_t context_dim() const = 0;
  virtual double predict(std::span<const double> x, int treatment) const = 0;
  // Predictions for T_1 .. T_n in order.
  virtual std::vector<double> predict_all(std::span<const double> x) const;

 protected:
  void check_context(std::span<const double> x) const;
  void check_treatment(int treatment) const;
};

// Estimated effect matrix: entry (i-1, j-1) is f(x, T_j) - f(x, T_i).
Tensor iae_matrix(const OutcomeModel& model, std::span<const double> x);

// Fraction of (i, j <= k) triples with alpha_ij <= alpha_ik, averaged over the
// contexts (rows of `contexts`). Diagnostic only.
double monotone_fraction(const OutcomeModel& model, const Tensor& contexts);

}  // namespace iae
