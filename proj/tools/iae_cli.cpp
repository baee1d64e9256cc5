// iae: generate synthetic data, train, evaluate PEHE bounds and simulate
// lvr bidding. Exit codes: 0 success, 1 runtime failure, 2 config/input error.

#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iae/commands.hpp"
#include "iae/error.hpp"
#include "iae/io.hpp"

namespace {

struct CliState {
  std::string out;
  std::uint64_t seed = 1;

  iae::GenConfig gen;
  std::string schema = "default";
  std::size_t context_dim = 30;

  iae::TrainOptions train;
  std::string activation = "elu";
  std::string ipm_method = "sinkhorn";

  iae::EvaluateOptions evaluate;
  std::string ledger;

  iae::SimulateOptions simulate;
  std::string log;
  std::string policy = "lvr";

  std::string manifest;
};

void common_flags(CLI::App* sub, CliState& s) {
  sub->add_option("--out", s.out, "Run output directory")->required();
  sub->add_option("--seed", s.seed, "Global seed")->capture_default_str();
}

void add_generate(CLI::App& app, CliState& s) {
  CLI::App* sub = app.add_subcommand("generate", "Generate a synthetic observational dataset");
  common_flags(sub, s);
  iae::GenConfig& g = s.gen;
  sub->add_option("--samples", g.samples, "Number of samples N")->capture_default_str();
  sub->add_option("--treatments", g.treatments, "Number of treatments n")->capture_default_str();
  sub->add_option("--bias", g.bias, "Selection-bias strength b")->capture_default_str();
  sub->add_option("--noise", g.noise, "Outcome noise standard deviation")->capture_default_str();
  sub->add_option("--lift-min", g.lift_min, "Smallest lift amplitude")->capture_default_str();
  sub->add_option("--lift-max", g.lift_max, "Largest lift amplitude")->capture_default_str();
  sub->add_option("--schema", s.schema, "Feature schema: default or plain")
      ->capture_default_str();
  sub->add_option("--context-dim", s.context_dim, "Context dim for the plain schema")
      ->capture_default_str();
}

void add_train(CLI::App& app, CliState& s) {
  CLI::App* sub = app.add_subcommand("train", "Train the representation and hypothesis networks");
  common_flags(sub, s);
  iae::ModelConfig& m = s.train.model;
  iae::TrainConfig& t = s.train.train;
  sub->add_option("--data", s.train.data, "Dataset CSV (sidecar next to it)")->required();
  sub->add_option("--rep-width", m.rep_width)->capture_default_str();
  sub->add_option("--rep-depth", m.rep_depth)->capture_default_str();
  sub->add_option("--hyp-width", m.hyp_width)->capture_default_str();
  sub->add_option("--hyp-depth", m.hyp_depth)->capture_default_str();
  sub->add_option("--activation", s.activation, "elu, relu or tanh")->capture_default_str();
  sub->add_option("--lambda", t.lambda, "l2 weight on hypothesis weights")->capture_default_str();
  sub->add_option("--beta", t.beta, "IPM weight")->capture_default_str();
  sub->add_option("--batch-size", t.batch_size)->capture_default_str();
  sub->add_option("--epochs", t.epochs)->capture_default_str();
  sub->add_option("--tolerance", t.tolerance, "Relative early-stop tolerance")
      ->capture_default_str();
  sub->add_option("--patience", t.patience)->capture_default_str();
  sub->add_option("--validation-fraction", t.validation_fraction)->capture_default_str();
  sub->add_option("--lr", t.adam.learning_rate, "Adam learning rate")->capture_default_str();
  sub->add_option("--ipm-method", s.ipm_method, "sinkhorn or exact-1d")->capture_default_str();
  sub->add_option("--ipm-epsilon", t.ipm.epsilon, "Relative entropic regularization")
      ->capture_default_str();
  sub->add_option("--ipm-iterations", t.ipm.iterations)->capture_default_str();
  sub->add_option("--ipm-relaxation", t.ipm.relaxation)->capture_default_str();
}

void add_evaluate(CLI::App& app, CliState& s) {
  CLI::App* sub = app.add_subcommand("evaluate", "PEHE and bound report against ground truth");
  common_flags(sub, s);
  iae::EvaluateOptions& e = s.evaluate;
  sub->add_option("--model", e.model, "Model directory")->required();
  sub->add_option("--data", e.data, "Dataset CSV with ground truth")->required();
  sub->add_option("--contexts", e.contexts, "Held-out evaluation contexts")
      ->capture_default_str();
  sub->add_option("--beta", e.beta, "Beta in the surrogate bound")->capture_default_str();
  sub->add_option("--ledger", s.ledger, "Runs-ledger CSV to append to");
  sub->add_option("--ipm-samples", e.bound.ipm_max_samples, "Max rows per IPM cloud")
      ->capture_default_str();
}

void add_simulate(CLI::App& app, CliState& s) {
  CLI::App* sub = app.add_subcommand("simulate", "Replay an lvr-bidding experiment");
  common_flags(sub, s);
  iae::SimConfig& c = s.simulate.sim;
  sub->add_option("--model", s.simulate.model, "Model directory")->required();
  sub->add_option("--data", s.simulate.data, "Dataset CSV with ground truth")->required();
  sub->add_option("--log", s.log, "Auction log CSV (generated when omitted)");
  sub->add_option("--ads", c.ads)->capture_default_str();
  sub->add_option("--history-days", c.history_days)->capture_default_str();
  sub->add_option("--days", c.days, "Experiment days")->capture_default_str();
  sub->add_option("--opportunities", c.opportunities_per_day)->capture_default_str();
  sub->add_option("--price-sigma", c.price_sigma)->capture_default_str();
  sub->add_option("--price-ratio", c.price_ratio)->capture_default_str();
  sub->add_option("--experiment-fraction", c.experiment_fraction)->capture_default_str();
  sub->add_option("--policy", s.policy, "Experiment-group policy: lvr or baseline")
      ->capture_default_str();
  sub->add_option("--kappa-min", c.calibration.kappa_min)->capture_default_str();
  sub->add_option("--kappa-max", c.calibration.kappa_max)->capture_default_str();
  sub->add_option("--tolerance", c.calibration.tolerance, "Relative cost tolerance")
      ->capture_default_str();
  sub->add_option("--max-steps", c.calibration.max_steps)->capture_default_str();
}

void add_reproduce(CLI::App& app, CliState& s) {
  CLI::App* sub =
      app.add_subcommand("reproduce", "Re-run a manifest and compare artifact hashes");
  sub->add_option("manifest", s.manifest, "manifest.json of the run to reproduce")->required();
  sub->add_option("--out", s.out, "Output directory for the re-run")->required();
}

// Runs the parsed subcommand. Returns the manifest it wrote.
iae::Manifest dispatch(CLI::App& app, CliState& s) {
  CLI::App* sub = app.get_subcommands().front();
  iae::RunContext run{sub->get_name(), s.out,
                      "[" + sub->get_name() + "]\n" + sub->config_to_str(true, false)};
  if (run.command == "generate") {
    if (s.schema == "plain") {
      s.gen.schema = iae::FeatureSchema::plain(s.context_dim);
    } else if (s.schema != "default") {
      throw iae::InputError("unknown schema '" + s.schema + "' (expected default or plain)");
    }
    s.gen.seed = s.seed;
    return iae::cmd_generate(s.gen, run);
  }
  if (run.command == "train") {
    s.train.model.activation = iae::parse_activation(s.activation);
    s.train.model.seed = s.seed;
    s.train.train.seed = s.seed;
    s.train.train.ipm.method = iae::parse_ipm_method(s.ipm_method);
    return iae::cmd_train(s.train, run);
  }
  if (run.command == "evaluate") {
    s.evaluate.seed = s.seed;
    if (!s.ledger.empty()) s.evaluate.ledger = s.ledger;
    return iae::cmd_evaluate(s.evaluate, run);
  }
  s.simulate.sim.seed = s.seed;
  s.simulate.sim.policy = iae::parse_experiment_policy(s.policy);
  if (!s.log.empty()) s.simulate.log = s.log;
  return iae::cmd_simulate(s.simulate, run);
}

void build(CLI::App& app, CliState& s) {
  app.set_config("--config", "", "INI config file with a [<command>] section; flags override it");
  app.require_subcommand(1);
  add_generate(app, s);
  add_train(app, s);
  add_evaluate(app, s);
  add_simulate(app, s);
  add_reproduce(app, s);
}

int run_cli(const std::vector<std::string>& args);

int reproduce(const CliState& s) {
  const iae::Manifest expected = iae::Manifest::load(s.manifest);
  if (expected.command == "reproduce" || expected.command.empty()) {
    throw iae::InputError("manifest names no runnable command");
  }
  const std::filesystem::path out(s.out);
  const std::filesystem::path ini = out / "config.ini";
  iae::io::write_file(ini, expected.config);
  const int code = run_cli({"iae", "--config", ini.string(), expected.command, "--out", s.out});
  if (code != 0) return code;
  const iae::Manifest actual = iae::Manifest::load(out / "manifest.json");
  const std::vector<std::string> bad = iae::artifact_mismatches(expected, actual);
  for (const std::string& name : bad) std::cerr << "artifact differs: " << name << "\n";
  if (!bad.empty()) return 1;
  std::cout << "reproduced " << expected.artifacts.size() << " artifacts bit-identically\n";
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app("Individual advertising effect estimation and lvr bidding", "iae");
  CliState state;
  build(app, state);
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    if (app.got_subcommand("reproduce")) return reproduce(state);
    dispatch(app, state);
    return 0;
  } catch (const iae::InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  return run_cli(std::vector<std::string>(argv, argv + argc));
}
