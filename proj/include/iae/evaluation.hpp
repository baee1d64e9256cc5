#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iae/dataset.hpp"
#include "iae/ipm.hpp"
#include "iae/outcome_model.hpp"
#include "iae/synthetic.hpp"
#include "iae/tensor.hpp"
#include "json.hpp"

namespace iae {

// Predictions f(x_r, T_i) for every context row r and treatment i: a
// rows x n matrix. Networks run as one batched pass, other models per row.
Tensor outcome_grid(const OutcomeModel& model, const Tensor& contexts);

// tau_ij(x) = alpha_hat_ij(x) - alpha_ij(x), 1-based i and j.
double tau(const OutcomeModel& model, const GroundTruth& truth, std::span<const double> x, int i,
           int j);

// Per-context sum over ordered pairs i != j of tau_ij^2, one entry per row.
std::vector<double> tau_square_sums(const OutcomeModel& model, const GroundTruth& truth,
                                    const Tensor& contexts);

// (1 / (n (n - 1))) * mean over contexts of sum_{i != j} tau_ij^2.
double pehe(const OutcomeModel& model, const GroundTruth& truth, const Tensor& contexts);

struct BoundCheckOptions {
  IpmConfig ipm = IpmConfig::evaluation();
  // Each treatment's representation cloud is subsampled to at most this many
  // rows before the IPM is computed.
  std::size_t ipm_max_samples = 200;
  std::uint64_t seed = 1;
};

struct PeheReport {
  std::size_t treatments = 0;
  std::size_t contexts = 0;
  double beta = 0.0;
  double pehe = 0.0;
  // mean over contexts of tau_{i,i+1}^2, i = 1..n-1, and their sum.
  std::vector<double> adjacent_tau_sq;
  double adjacent_sum = 0.0;
  bool adjacent_bound_holds = false;
  // Cauchy-Schwarz bound that always holds:
  //   (2 / (n (n - 1))) sum_k c_k mean tau_{k,k+1}^2,
  //   c_k = sum over pairs i <= k < j of (j - i).
  double weighted_adjacent_bound = 0.0;
  // Factual losses per treatment on the dataset and eps_{i,i+1} sums.
  std::vector<double> factual_loss;
  std::vector<std::size_t> factual_count;
  std::vector<double> pair_factual;
  // Representation IPM per adjacent pair (empty for models without a
  // representation).
  bool ipm_available = false;
  std::vector<double> ipm;
  double ipm_sum = 0.0;
  // 2 sum_i [eps_{i,i+1} + beta IPM_i]; monitored, never asserted.
  double surrogate = 0.0;
  bool surrogate_exceeded = false;

  // Non-negativity of every component plus recombination of the sums
  // (relative 1e-9).
  bool consistent() const;
  nlohmann::json to_json() const;
};

// `contexts` are held-out contexts for the PEHE terms; `data` supplies the
// factual losses and the representation clouds.
PeheReport bound_check(const OutcomeModel& model, const GroundTruth& truth, const Tensor& contexts,
                       const Dataset& data, double beta, const BoundCheckOptions& options = {});

// Appends `run,treatments,contexts,beta,pehe,adjacent_sum,adjacent_bound_holds,
// weighted_adjacent_bound,surrogate` to a CSV ledger, writing the header
// first when the file is new.
void append_ledger_row(const std::filesystem::path& ledger, const std::string& run,
                       const PeheReport& report);

}  // namespace iae
