#include "iae/outcome_model.hpp"

#include <cmath>
#include <string>

#include "iae/error.hpp"

namespace iae {

std::vector<double> OutcomeModel::predict_all(std::span<const double> x) const {
  std::vector<double> out(treatments());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = predict(x, static_cast<int>(i) + 1);
  return out;
}

void OutcomeModel::check_context(std::span<const double> x) const {
  if (x.size() != context_dim()) {
    throw InputError("context has dim " + std::to_string(x.size()) + ", model expects " +
                     std::to_string(context_dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("context has a non-finite entry");
  }
}

void OutcomeModel::check_treatment(int treatment) const {
  if (treatment < 1 || static_cast<std::size_t>(treatment) > treatments()) {
    throw InputError("treatment index " + std::to_string(treatment) + " outside 1.." +
                     std::to_string(treatments()));
  }
}

Tensor iae_matrix(const OutcomeModel& model, std::span<const double> x) {
  const std::vector<double> f = model.predict_all(x);
  const std::size_t n = f.size();
  Tensor alpha = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) alpha(i, j) = f[j] - f[i];
  return alpha;
}

double monotone_fraction(const OutcomeModel& model, const Tensor& contexts) {
  const std::size_t n = model.treatments();
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::size_t r = 0; r < contexts.rows(); ++r) {
    const Tensor alpha = iae_matrix(model, contexts.row_span(r));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = j + 1; k < n; ++k) {
          ++total;
          if (alpha(i, j) <= alpha(i, k)) ++hits;
        }
  }
  return total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace iae
