#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "iae/tape.hpp"
#include "iae/tensor.hpp"

namespace iae {

// Integral probability metric over the 1-Lipschitz family, i.e. the
// Wasserstein-1 distance with Euclidean ground cost, between two uniformly
// weighted point clouds.

enum class IpmMethod { kSinkhorn, kExact1d };

IpmMethod parse_ipm_method(const std::string& name);
std::string ipm_method_name(IpmMethod m);

struct IpmConfig {
  IpmMethod method = IpmMethod::kSinkhorn;
  // Entropic regularization. With `relative_epsilon` the effective value is
  // epsilon * median pairwise cost of the two clouds (treated as a constant,
  // no gradient flows through it).
  double epsilon = 0.1;
  bool relative_epsilon = true;
  std::size_t iterations = 50;
  // Over-relaxation factor for the sweeps after the annealing phase; 1 gives
  // plain Sinkhorn.
  double relaxation = 1.9;
  // Average the p->q and q->p solves so the value is exactly symmetric.
  // Unconverged Sinkhorn is otherwise only symmetric up to its residual.
  bool symmetric = true;

  void validate() const;
  // Cheap setting used inside the training loop: one-way solve, 50 sweeps.
  static IpmConfig training();
  // Tighter setting used for reports: eps = 0.01 * median cost, 200 sweeps.
  static IpmConfig evaluation();
};

// Rows are samples. Uniform weights are implied.
class SampleCloud {
 public:
  explicit SampleCloud(Tensor points);
  static SampleCloud from_1d(std::span<const double> values);

  const Tensor& points() const { return points_; }
  std::size_t size() const { return points_.rows(); }
  std::size_t dim() const { return points_.cols(); }

 private:
  Tensor points_;
};

struct IpmResult {
  double distance = 0.0;
  Tensor grad_p;  // d distance / d p, same shape as p.points()
  Tensor grad_q;
};

IpmResult ipm_distance(const SampleCloud& p, const SampleCloud& q, const IpmConfig& config);

// Differentiable distance between the row sets of `p` and `q` recorded on a
// tape: unrolled log-domain Sinkhorn for `config.iterations` sweeps followed by
// the transport cost <P, C> of the resulting plan. Gradients flow into p and
// q through every sweep.
//
// The effective eps is computed from the clouds' values and carries no
// gradient.
Var sinkhorn_distance(Tape& tape, Var p, Var q, const IpmConfig& config);

// Exact 1-D W1: mean |sorted p - sorted q| for equal sizes, otherwise the
// integral of |F_p^-1(u) - F_q^-1(u)| over u in [0, 1].
double exact_wasserstein_1d(std::span<const double> p, std::span<const double> q);

// Median of the Euclidean distances between all (p_i, q_j) pairs.
double median_pairwise_cost(const Tensor& p, const Tensor& q);

}  // namespace iae
