#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "iae/dataset.hpp"
#include "iae/outcome_model.hpp"
#include "iae/tensor.hpp"
#include "json.hpp"

namespace iae {

struct GenConfig {
  std::size_t samples = 20000;
  std::size_t treatments = 5;
  FeatureSchema schema = FeatureSchema::default_schema();
  // Strength b of context-driven treatment assignment; 0 randomizes.
  double bias = 1.0;
  double noise = 0.5;
  // Range of the per-context lift amplitude.
  double lift_min = 0.5;
  double lift_max = 4.0;
  std::uint64_t seed = 1;

  std::size_t context_dim() const { return schema.dim(); }
  void validate() const;
  nlohmann::json to_json() const;
  static GenConfig from_json(const nlohmann::json& j);
};

// Closed-form potential outcomes
//   m_i(x) = base(x) + lift(x) * g(i - 1),  g(k) = 1 - (1 - k / (n - 1))^2,
// with base(x) = base_level + base_amplitude * tanh(u_b(x)) and
// lift(x) = lift_min + (lift_max - lift_min) * sigmoid(u_l(x)), where u_b, u_l
// are standardized linear scores of the context.
class GroundTruth {
 public:
  GroundTruth() = default;
  // Draws the score weights and standardizes them on a pilot sample.
  static GroundTruth draw(const GenConfig& config);

  std::size_t treatments() const { return treatments_; }
  std::size_t context_dim() const { return base_weights_.size(); }
  double noise() const { return noise_; }

  double base(std::span<const double> x) const;
  double lift(std::span<const double> x) const;
  // g(k) for k advertising clicks, 0 <= k <= n - 1.
  double saturation(std::size_t clicks) const;
  // m_i(x), 1-based treatment index.
  double mean_outcome(std::span<const double> x, int treatment) const;
  // alpha_ij(x) = m_j(x) - m_i(x).
  double true_iae(std::span<const double> x, int i, int j) const;
  // Assignment score in (-1, 1); rises with lift(x).
  double selection_score(std::span<const double> x) const;
  // softmax_i(b * score(x) * (i - 1) / (n - 1)).
  std::vector<double> assignment_probabilities(std::span<const double> x, double bias) const;

  nlohmann::json to_json() const;
  static GroundTruth from_json(const nlohmann::json& j);
  bool operator==(const GroundTruth& other) const = default;

 private:
  double base_score(std::span<const double> x) const;
  double lift_score(std::span<const double> x) const;
  void check(std::span<const double> x) const;

  std::size_t treatments_ = 0;
  double noise_ = 0.0;
  double base_level_ = 4.0;
  double base_amplitude_ = 2.0;
  double lift_min_ = 0.5;
  double lift_max_ = 4.0;
  std::vector<double> base_weights_;
  std::vector<double> lift_weights_;
  double base_center_ = 0.0;
  double base_scale_ = 1.0;
  double lift_center_ = 0.0;
  double lift_scale_ = 1.0;
};

// Draws contexts that follow a FeatureSchema. One-hot groups pick a uniform
// category, "pv_*" groups are positive page-view volumes (pv_lastweek is an
// exponentially decayed blend with pv_lastday when both exist), log columns
// hold log(1 + rank) for a uniform rank in 1..100, everything else is a unit
// Gaussian sharing a latent activity factor.
class ContextSampler {
 public:
  ContextSampler(FeatureSchema schema, std::uint64_t seed);

  std::vector<double> next();
  Tensor draw(std::size_t count);

 private:
  FeatureSchema schema_;
  std::mt19937_64 rng_;
};

struct Generated {
  Dataset data;
  GroundTruth truth;
};

// Samples contexts, assigns treatments by softmax(b * score) and draws
// y = max(0, m_t(x) + noise). The ground truth is attached to the dataset.
Generated generate(const GenConfig& config);

// Held-out contexts from the same distribution but an independent stream.
Tensor evaluation_contexts(const GenConfig& config, std::size_t count);

// Reads the ground truth attached to a dataset; throws InputError when absent.
GroundTruth ground_truth_of(const Dataset& data);

// The true m_i(x) as an OutcomeModel.
class OracleModel : public OutcomeModel {
 public:
  explicit OracleModel(GroundTruth truth) : truth_(std::move(truth)) {}

  const GroundTruth& truth() const { return truth_; }
  std::size_t treatments() const override { return truth_.treatments(); }
  std::size_t context_dim() const override { return truth_.context_dim(); }
  double predict(std::span<const double> x, int treatment) const override;

  // model.json with kind "oracle" and the embedded ground truth.
  void save(const std::filesystem::path& dir) const;

 private:
  GroundTruth truth_;
};

// Loads either a trained network or an oracle from a model directory.
std::unique_ptr<OutcomeModel> load_outcome_model(const std::filesystem::path& dir);

}  // namespace iae
