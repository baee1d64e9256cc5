#include "iae/commands.hpp"

#include <iostream>

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

namespace {

Manifest start_run(const RunContext& run) {
  std::filesystem::create_directories(run.out);
  io::write_file(run.out / "config.ini", run.resolved_config);
  Manifest m;
  m.command = run.command;
  m.config = run.resolved_config;
  return m;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  io::write_file(path, j.dump(2) + "\n");
}

GenConfig generator_of(const Dataset& data) {
  const nlohmann::json& gt = data.ground_truth();
  if (gt.is_null()) throw InputError("PEHE requires ground truth");
  if (!gt.contains("generator")) throw InputError("dataset sidecar lacks the generator config");
  return GenConfig::from_json(gt.at("generator"));
}

}  // namespace

Manifest cmd_generate(const GenConfig& config, const RunContext& run) {
  config.validate();
  Manifest m = start_run(run);
  const Generated g = generate(config);
  save_dataset(g.data, run.out / "data.csv");
  OracleModel(g.truth).save(run.out / "oracle");
  record_artifacts(m, run.out, {"data.csv", "data.json", "oracle/model.json"});
  m.save(run.out);
  return m;
}

Manifest cmd_train(const TrainOptions& options, const RunContext& run) {
  const Dataset data = load_dataset(options.data);
  ModelConfig mc = options.model;
  mc.context_dim = data.context_dim();
  mc.treatments = data.treatments();
  mc.validate();
  options.train.validate();
  Manifest m = start_run(run);
  record_input(m, options.data);
  record_input(m, sidecar_path(options.data));

  TrainResult result = train(data, mc, options.train);
  result.report.checkpoint = "model";
  result.model.save(run.out / "model");
  write_json(run.out / "train_report.json", result.report.to_json());
  io::write_file(run.out / "train_metrics.csv", result.report.to_csv());
  record_artifacts(m, run.out,
                   {"model/model.json", "model/checkpoint.json", "train_report.json",
                    "train_metrics.csv"});
  m.save(run.out);
  return m;
}

Manifest cmd_evaluate(const EvaluateOptions& options, const RunContext& run) {
  if (options.contexts < 1) throw InputError("evaluate: need at least 1 evaluation context");
  const Dataset data = load_dataset(options.data);
  const GroundTruth truth = ground_truth_of(data);
  const std::unique_ptr<OutcomeModel> model = load_outcome_model(options.model);
  GenConfig gen = generator_of(data);
  gen.seed = options.seed;
  BoundCheckOptions bound = options.bound;
  bound.seed = options.seed;
  Manifest m = start_run(run);
  record_input(m, options.data);
  record_input(m, sidecar_path(options.data));
  record_input(m, options.model / "model.json");
  if (std::filesystem::exists(options.model / "checkpoint.json")) {
    record_input(m, options.model / "checkpoint.json");
  }

  const Tensor contexts = evaluation_contexts(gen, options.contexts);
  const PeheReport report = bound_check(*model, truth, contexts, data, options.beta, bound);
  write_json(run.out / "pehe_report.json", report.to_json());
  if (options.ledger) append_ledger_row(*options.ledger, run.out.filename().string(), report);
  if (!report.adjacent_bound_holds) {
    std::cerr << "warning: PEHE " << report.pehe << " exceeds the adjacent-pair sum "
              << report.adjacent_sum << "\n";
  }
  if (report.surrogate_exceeded) {
    std::cerr << "note: PEHE exceeds the surrogate bound (omitted variance term)\n";
  }
  record_artifacts(m, run.out, {"pehe_report.json"});
  m.save(run.out);
  return m;
}

Manifest cmd_simulate(const SimulateOptions& options, const RunContext& run) {
  options.sim.validate();
  const Dataset data = load_dataset(options.data);
  const GroundTruth truth = ground_truth_of(data);
  const std::unique_ptr<OutcomeModel> model = load_outcome_model(options.model);
  const World world = make_world(truth, data.schema(), options.sim);
  Manifest m = start_run(run);
  record_input(m, options.data);
  record_input(m, sidecar_path(options.data));
  record_input(m, options.model / "model.json");
  if (std::filesystem::exists(options.model / "checkpoint.json")) {
    record_input(m, options.model / "checkpoint.json");
  }
  AuctionLog log;
  if (options.log) {
    log = AuctionLog::load(*options.log);
    record_input(m, *options.log);
  } else {
    log = world_log(world, options.sim);
  }
  log.save(run.out / "auction_log.csv");

  const ExperimentReport report = run_experiment(*model, world, log, options.sim);
  write_json(run.out / "experiment_report.json", report.to_json());
  io::write_file(run.out / "experiment_series.csv", report.series_csv());
  for (const CalibrationResult& c : report.calibration) {
    if (!c.warning.empty()) std::cerr << "warning: " << c.warning << "\n";
  }
  record_artifacts(m, run.out,
                   {"auction_log.csv", "experiment_report.json", "experiment_series.csv"});
  m.save(run.out);
  return m;
}

std::vector<std::string> artifact_mismatches(const Manifest& expected, const Manifest& actual) {
  std::vector<std::string> out;
  for (const auto& [name, hash] : expected.artifacts) {
    auto it = actual.artifacts.find(name);
    if (it == actual.artifacts.end() || it->second != hash) out.push_back(name);
  }
  return out;
}

}  // namespace iae
