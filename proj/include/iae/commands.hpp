#pragma once

// The four run commands behind the CLI. Each writes its artifacts, the
// resolved config (`config.ini`) and `manifest.json` into `run.out`.

#include <filesystem>
#include <optional>
#include <string>

#include "iae/evaluation.hpp"
#include "iae/experiment.hpp"
#include "iae/manifest.hpp"
#include "iae/model.hpp"
#include "iae/synthetic.hpp"
#include "iae/trainer.hpp"

namespace iae {

struct RunContext {
  std::string command;
  std::filesystem::path out;
  // Resolved key-value config text persisted as config.ini.
  std::string resolved_config;
};

// out/data.csv + out/data.json, and out/oracle/model.json holding the true
// potential outcomes.
Manifest cmd_generate(const GenConfig& config, const RunContext& run);

struct TrainOptions {
  std::filesystem::path data;
  // context_dim and treatments are taken from the dataset.
  ModelConfig model;
  TrainConfig train;
};

// out/model/{model.json,checkpoint.json}, out/train_report.json,
// out/train_metrics.csv.
Manifest cmd_train(const TrainOptions& options, const RunContext& run);

struct EvaluateOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  std::size_t contexts = 1000;
  double beta = 1.0;
  // Runs ledger; a row is appended on every evaluation. Not a hashed artifact.
  std::optional<std::filesystem::path> ledger;
  BoundCheckOptions bound;
  std::uint64_t seed = 1;
};

// out/pehe_report.json.
Manifest cmd_evaluate(const EvaluateOptions& options, const RunContext& run);

struct SimulateOptions {
  std::filesystem::path model;
  std::filesystem::path data;
  // Replay this log instead of generating one from the simulated world.
  std::optional<std::filesystem::path> log;
  SimConfig sim;
};

// out/experiment_report.json, out/experiment_series.csv, out/auction_log.csv.
Manifest cmd_simulate(const SimulateOptions& options, const RunContext& run);

// Artifacts of `expected` whose hash differs from (or is missing in) `actual`.
std::vector<std::string> artifact_mismatches(const Manifest& expected, const Manifest& actual);

}  // namespace iae
