#pragma once

// Observational samples {x_i, t_i, y_i}.
//
// On-disk format: `<name>.csv` with header `t,y,x_0,...,x_{d-1}` (t is the
// 1-based treatment index) plus a JSON sidecar `<name>.json`:
//
//   {
//     "format": "iae-dataset", "version": 1,
//     "treatments": n, "context_dim": d, "rows": N,
//     "feature_schema": [ {"name": ..., "dim": ..., "kind": "one_hot"|"continuous",
//                          "log_columns": [...]}, ... ],
//     "ground_truth": { ... }          // synthetic data only
//   }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "iae/model.hpp"
#include "iae/tensor.hpp"
#include "json.hpp"

namespace iae {

enum class FeatureKind { kOneHot, kContinuous };

struct FeatureGroup {
  std::string name;
  std::size_t dim = 0;
  FeatureKind kind = FeatureKind::kContinuous;
  // Columns (relative to the group) holding log(1 + v) transforms.
  std::vector<std::size_t> log_columns;
};

struct FeatureSchema {
  std::vector<FeatureGroup> groups;

  std::size_t dim() const;
  // Column offset of the named group; throws if absent.
  std::size_t offset(const std::string& group) const;
  std::vector<bool> one_hot_mask() const;
  bool empty() const { return groups.empty(); }

  // ids 10 (one-hot), pv_lastday 6, pv_lastweek 6, shop 5, competition 3.
  static FeatureSchema default_schema();
  // Single continuous group of the given width.
  static FeatureSchema plain(std::size_t dim);

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& j);
};

struct Sample {
  std::vector<double> x;
  int t = 1;  // 1-based treatment index
  double y = 0.0;
};

class Dataset {
 public:
  Dataset(std::size_t treatments, std::size_t context_dim, std::vector<Sample> samples,
          FeatureSchema schema = {});

  std::size_t size() const { return samples_.size(); }
  std::size_t treatments() const { return treatments_; }
  std::size_t context_dim() const { return context_dim_; }
  const FeatureSchema& schema() const { return schema_; }
  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

  // N_j and mu_j = N_j / N for treatment j (1-based).
  std::size_t count(int treatment) const;
  double mu(int treatment) const;
  // w_i = mu_{t_i}.
  double weight(std::size_t i) const { return mu(samples_[i].t); }
  const std::vector<std::size_t>& counts() const { return counts_; }

  Tensor contexts() const;
  Tensor contexts(std::span<const std::size_t> rows) const;

  // Extra sidecar payload (the synthetic ground truth); null when absent.
  const nlohmann::json& ground_truth() const { return ground_truth_; }
  void set_ground_truth(nlohmann::json gt) { ground_truth_ = std::move(gt); }

 private:
  void recount();

  std::size_t treatments_;
  std::size_t context_dim_;
  std::vector<Sample> samples_;
  FeatureSchema schema_;
  std::vector<std::size_t> counts_;
  nlohmann::json ground_truth_;
};

enum class DataFormat { kCsv };

std::filesystem::path sidecar_path(const std::filesystem::path& csv);

Dataset load_dataset(const std::filesystem::path& csv, DataFormat format = DataFormat::kCsv);
void save_dataset(const Dataset& data, const std::filesystem::path& csv);

// Mean / standard deviation of every continuous column over `rows`; one-hot
// columns pass through unchanged.
InputScaler fit_scaler(const Dataset& data, std::span<const std::size_t> rows);

// Shuffled passes over 0..N-1 without replacement; each epoch draws a fresh
// permutation from one seeded stream.
class MinibatchSampler {
 public:
  MinibatchSampler(std::size_t population, std::size_t batch_size, std::uint64_t seed);

  std::size_t batch_size() const { return batch_size_; }
  // True when the requested size exceeded the population and was clamped.
  bool clamped() const { return clamped_; }
  std::vector<std::vector<std::size_t>> next_epoch();

 private:
  std::size_t population_;
  std::size_t batch_size_;
  bool clamped_ = false;
  std::mt19937_64 rng_;
};

// Seeded split of 0..N-1 into (train, validation); validation gets
// round(fraction * N) rows. Both lists are sorted.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t population, double validation_fraction, std::uint64_t seed);

}  // namespace iae
