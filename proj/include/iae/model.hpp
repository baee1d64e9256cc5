#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iae/checkpoint.hpp"
#include "iae/outcome_model.hpp"
#include "iae/tape.hpp"
#include "iae/tensor.hpp"
#include "json.hpp"

namespace iae {

enum class Activation { kElu, kRelu, kTanh };

Activation parse_activation(const std::string& name);
std::string activation_name(Activation a);

struct ModelConfig {
  std::size_t context_dim = 0;
  std::size_t treatments = 0;
  std::size_t rep_width = 64;
  std::size_t rep_depth = 3;
  std::size_t hyp_width = 64;
  std::size_t hyp_depth = 3;
  Activation activation = Activation::kElu;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

// Affine layer y = x W + b, W is fan_in x fan_out, b is 1 x fan_out.
struct Linear {
  Tensor weight;
  Tensor bias;
};

// Per-feature (x - mean) / scale applied before the representation network.
// Fitted on the training split; identity when empty.
struct InputScaler {
  std::vector<double> mean;
  std::vector<double> scale;

  bool empty() const { return mean.empty(); }
  void apply(std::span<const double> x, std::span<double> out) const;
  Tensor apply(const Tensor& rows) const;
  nlohmann::json to_json() const;
  static InputScaler from_json(const nlohmann::json& j);
};

// Tape handles for every parameter tensor of a Model.
struct BoundParams {
  std::vector<Var> rep_weight, rep_bias, hyp_weight, hyp_bias;
};

// f(x, T) = h(Phi(x), T). Phi is an MLP with `rep_depth` affine layers and a
// linear output; h takes [Phi(x), (i-1)/(n-1)] and has `hyp_depth` affine
// layers ending in a single linear unit. Parameters of Phi form the group W,
// parameters of h the group V.
class Model : public OutcomeModel {
 public:
  // Glorot-uniform weights, zero biases, seeded by config.seed.
  static Model initialize(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::size_t treatments() const override { return config_.treatments; }
  std::size_t context_dim() const override { return config_.context_dim; }
  std::size_t representation_dim() const { return config_.rep_width; }

  std::vector<Linear>& representation_layers() { return rep_; }
  const std::vector<Linear>& representation_layers() const { return rep_; }
  std::vector<Linear>& hypothesis_layers() { return hyp_; }
  const std::vector<Linear>& hypothesis_layers() const { return hyp_; }
  InputScaler& scaler() { return scaler_; }
  const InputScaler& scaler() const { return scaler_; }

  std::vector<double> represent(std::span<const double> x) const;
  double predict(std::span<const double> x, int treatment) const override;
  std::vector<double> predict_all(std::span<const double> x) const override;

  // Batched inference on raw (unscaled) contexts, one row per sample.
  Tensor represent_batch(const Tensor& contexts) const;
  std::vector<double> predict_batch(const Tensor& contexts,
                                    std::span<const int> treatments) const;

  // Training path. `scaled_contexts` must already have the scaler applied.
  BoundParams bind(Tape& tape) const;
  Var represent(Tape& tape, const BoundParams& p, Var scaled_contexts) const;
  Var hypothesis(Tape& tape, const BoundParams& p, Var representation,
                 Var treatment_channel) const;

  // Scalar treatment channel fed to h: (i - 1) / (n - 1).
  double treatment_channel(int treatment) const;

  // Flattened views in a fixed order: all of W then all of V.
  std::vector<Tensor*> parameter_tensors();
  std::size_t representation_tensor_count() const { return 2 * rep_.size(); }

  TensorMap parameters() const;
  void set_parameters(const TensorMap& tensors);
  bool operator==(const Model& other) const;

  // model.json (config + scaler) and checkpoint.json (tensors) in `dir`.
  void save(const std::filesystem::path& dir) const;
  static Model load(const std::filesystem::path& dir);

 private:
  explicit Model(ModelConfig config) : config_(config) {}
  Tensor activate(Tensor t) const;
  Var activate(Tape& tape, Var v) const;

  ModelConfig config_;
  std::vector<Linear> rep_;
  std::vector<Linear> hyp_;
  InputScaler scaler_;
};

}  // namespace iae
