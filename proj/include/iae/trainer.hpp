#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iae/adam.hpp"
#include "iae/dataset.hpp"
#include "iae/ipm.hpp"
#include "iae/model.hpp"
#include "iae/tape.hpp"
#include "json.hpp"

namespace iae {

struct TrainConfig {
  double lambda = 1e-4;  // l2 weight on the hypothesis weight matrices
  double beta = 1.0;     // weight of the adjacent-treatment IPM sum
  std::size_t batch_size = 256;
  std::size_t epochs = 100;
  // Early stop once the validation factual loss has not improved by more than
  // `tolerance` (relative) for `patience` consecutive epochs.
  double tolerance = 1e-4;
  std::size_t patience = 10;
  double validation_fraction = 0.2;
  AdamConfig adam;
  IpmConfig ipm = IpmConfig::training();
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
};

// mu_j = N_j / N over `rows` (1-based j maps to entry j - 1). Throws
// InputError if any treatment has no sample.
std::vector<double> treatment_weights(const Dataset& data, std::span<const std::size_t> rows);

// Closed-form per-sample coefficient of the squared loss in the minibatch
// objective: mu_t (2 - [t is T_1 or T_n]) / m.
std::vector<double> factual_coefficients(const Dataset& data, std::span<const std::size_t> batch,
                                         std::span<const double> mu);

// Tape handles of one minibatch objective
//   total = weighted_factual - endpoint_correction + lambda * l2 + beta * ipm_sum
// with
//   weighted_factual    = (2/m) sum_i w_i L_i
//   endpoint_correction = (mu_1/m) sum_{t_i = T_1} L_i + (mu_n/m) sum_{t_i = T_n} L_i
//   l2                  = squared Frobenius norm of the hypothesis weights
//   ipm_sum             = sum over adjacent pairs of IPM(Phi | T_i, Phi | T_i+1)
// Adjacent pairs with fewer than 2 batch samples on either side are skipped,
// and the IPM is not built at all when beta is 0.
struct ObjectiveGraph {
  Var losses;  // m x 1 per-sample squared losses L_i
  Var weighted_factual;
  Var endpoint_correction;
  Var l2;
  Var ipm_sum;
  Var total;
  std::size_t ipm_pairs = 0;  // adjacent pairs that entered ipm_sum
};

struct ObjectiveValues {
  double weighted_factual = 0.0;
  double endpoint_correction = 0.0;
  double l2 = 0.0;
  double ipm_sum = 0.0;
  double total = 0.0;
};

ObjectiveGraph build_objective(Tape& tape, const Model& model, const BoundParams& params,
                               const Dataset& data, std::span<const std::size_t> batch,
                               std::span<const double> mu, const TrainConfig& config);
ObjectiveValues objective_values(const Tape& tape, const ObjectiveGraph& graph);
// Value-only convenience wrapper.
ObjectiveValues objective(const Model& model, const Dataset& data,
                          std::span<const std::size_t> batch, std::span<const double> mu,
                          const TrainConfig& config);

// Mean squared error of the model on the given rows.
double factual_mse(const Model& model, const Dataset& data, std::span<const std::size_t> rows);

struct EpochRecord {
  std::size_t epoch = 0;
  // Batch means of the objective components.
  double weighted_factual = 0.0;
  double endpoint_correction = 0.0;
  double l2_penalty = 0.0;  // lambda * l2
  double ipm_sum = 0.0;
  double objective = 0.0;
  double val_factual = 0.0;

  // Corrected factual loss: weighted_factual - endpoint_correction.
  double factual() const { return weighted_factual - endpoint_correction; }
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  double initial_val_factual = 0.0;
  // 0 means the initialization was never beaten.
  std::size_t best_epoch = 0;
  double best_val_factual = 0.0;
  bool stopped_early = false;
  std::string checkpoint;

  nlohmann::json to_json() const;
  // Header: epoch,factual,ipm_sum,objective,val_factual
  std::string to_csv() const;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

// Algorithm loop: seeded train/validation split, input scaler fitted on the
// training split, shuffled minibatches, one Adam update per batch on the
// combined gradients (beta g1 + g3 for W, g2 + 2 lambda V for V), early
// stopping on the validation factual loss. Returns the best-validation
// parameters. Throws NumericError when the objective turns non-finite.
TrainResult train(const Dataset& data, const ModelConfig& model_config,
                  const TrainConfig& config);

}  // namespace iae
