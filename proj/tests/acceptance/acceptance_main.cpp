// Acceptance harness: one PASS/FAIL line per criterion.
//
// The exit status is 0 when every requested criterion ran to completion, so a
// failing criterion is reported rather than hidden. `--strict` makes any FAIL
// exit 1 as well.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iae/auction.hpp"
#include "iae/evaluation.hpp"
#include "iae/experiment.hpp"
#include "iae/ipm.hpp"
#include "iae/lvr.hpp"
#include "iae/model.hpp"
#include "iae/synthetic.hpp"
#include "iae/trainer.hpp"

namespace iae::acceptance {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  std::size_t seeds = 10;
  std::size_t samples = 20000;
  std::size_t epochs = 15;
  std::set<int> only;
  bool strict = false;
  std::filesystem::path work;
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

void randomize(Model& m, std::mt19937_64& rng, double sd = 0.5) {
  std::normal_distribution<double> z(0.0, sd);
  for (Tensor* t : m.parameter_tensors()) {
    for (double& v : t->values()) v = z(rng);
  }
}

Tensor random_contexts(std::size_t rows, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Tensor t = Tensor::matrix(rows, dim);
  for (double& v : t.values()) v = z(rng);
  return t;
}

ModelConfig model_config(std::size_t d, std::size_t n, std::uint64_t seed, std::size_t width) {
  ModelConfig c;
  c.context_dim = d;
  c.treatments = n;
  c.rep_width = width;
  c.hyp_width = width;
  c.seed = seed;
  return c;
}

// ---- 1 --------------------------------------------------------------------

Outcome matrix_properties() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  const std::size_t n = 5, d = 8;
  Model m = Model::initialize(model_config(d, n, 1, 32));
  randomize(m, rng);
  const Tensor xs = random_contexts(1000, d, rng);
  double worst = 0.0;
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    const Tensor a = iae_matrix(m, xs.row_span(r));
    for (std::size_t i = 0; i < n; ++i) {
      worst = std::max(worst, std::abs(a(i, i)));
      for (std::size_t j = 0; j < n; ++j) {
        worst = std::max(worst, std::abs(a(i, j) + a(j, i)));
        for (std::size_t k = 0; k < n; ++k) {
          worst = std::max(worst, std::abs(a(i, j) + a(j, k) - a(i, k)));
        }
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 10.0,
          "max violation " + fmt(worst) + " over 1000 contexts, " + fmt(secs) + " s"};
}

// ---- 2 --------------------------------------------------------------------

Outcome telescoping() {
  const auto start = Clock::now();
  GenConfig gc;
  gc.samples = 200;
  gc.seed = 102;
  const Generated g = generate(gc);
  std::mt19937_64 rng(102);
  Model m = Model::initialize(model_config(g.data.context_dim(), 5, 2, 32));
  randomize(m, rng, 0.2);
  const Tensor xs = evaluation_contexts(gc, 1000);
  double worst = 0.0;
  for (std::size_t r = 0; r < xs.rows(); ++r) {
    const auto x = xs.row_span(r);
    std::vector<double> adjacent(4);
    for (int k = 1; k <= 4; ++k) adjacent[k - 1] = tau(m, g.truth, x, k, k + 1);
    for (int i = 1; i <= 5; ++i) {
      for (int j = i + 1; j <= 5; ++j) {
        double sum = 0.0;
        for (int k = i; k < j; ++k) sum += adjacent[k - 1];
        worst = std::max(worst, std::abs(tau(m, g.truth, x, i, j) - sum));
      }
    }
  }
  const double secs = seconds_since(start);
  return {worst <= 1e-9 && secs < 10.0,
          "max deviation " + fmt(worst) + " over 1000 contexts, " + fmt(secs) + " s"};
}

// ---- shared training runs (criteria 3, 7, 9) ------------------------------

struct TrainedRun {
  std::size_t seed = 0;
  double bias = 0.0;
  GenConfig gen;
  std::shared_ptr<Generated> world;
  std::map<double, Model> models;  // by beta
  std::map<double, double> pehe;
};

class TrainedRuns {
 public:
  explicit TrainedRuns(const Options& opt) : opt_(opt) {}

  const std::vector<TrainedRun>& get() {
    if (!runs_.empty()) return runs_;
    const auto start = Clock::now();
    for (double bias : {5.0, 0.0}) {
      for (std::size_t s = 1; s <= opt_.seeds; ++s) {
        TrainedRun run;
        run.seed = s;
        run.bias = bias;
        run.gen.samples = opt_.samples;
        run.gen.bias = bias;
        run.gen.seed = s;
        run.world = std::make_shared<Generated>(generate(run.gen));
        const Tensor xs = evaluation_contexts(run.gen, 1000);
        for (double beta : {0.0, 1.0}) {
          TrainConfig tc;
          tc.beta = beta;
          tc.epochs = opt_.epochs;
          tc.seed = s;
          ModelConfig mc;
          mc.seed = s;
          mc.context_dim = run.world->data.context_dim();
          mc.treatments = run.world->data.treatments();
          Model model = train(run.world->data, mc, tc).model;
          run.pehe[beta] = pehe(model, run.world->truth, xs);
          run.models.emplace(beta, std::move(model));
        }
        std::cerr << "  trained b=" << bias << " seed=" << s << ": pehe beta0 "
                  << fmt(run.pehe[0.0]) << ", beta1 " << fmt(run.pehe[1.0]) << "\n";
        runs_.push_back(std::move(run));
      }
    }
    train_seconds_ = seconds_since(start);
    return runs_;
  }
  double train_seconds() const { return train_seconds_; }

 private:
  const Options& opt_;
  std::vector<TrainedRun> runs_;
  double train_seconds_ = 0.0;
};

// ---- 3 --------------------------------------------------------------------

Outcome adjacent_bound(TrainedRuns& runs) {
  std::size_t checked = 0, held = 0, weighted_held = 0;
  double worst_ratio = 0.0;
  BoundCheckOptions bopt;
  bopt.ipm_max_samples = 100;
  auto record = [&](const PeheReport& r) {
    ++checked;
    held += r.adjacent_bound_holds;
    weighted_held += r.pehe <= r.weighted_adjacent_bound * (1 + 1e-12);
    if (r.adjacent_sum > 0) worst_ratio = std::max(worst_ratio, r.pehe / r.adjacent_sum);
  };

  // 20 random models on the default world.
  GenConfig gc;
  gc.samples = 2000;
  gc.seed = 103;
  const Generated g = generate(gc);
  const Tensor xs = evaluation_contexts(gc, 1000);
  std::mt19937_64 rng(103);
  for (std::uint64_t k = 0; k < 20; ++k) {
    Model m = Model::initialize(model_config(g.data.context_dim(), 5, 200 + k, 32));
    randomize(m, rng, 0.2);
    record(bound_check(m, g.truth, xs, g.data, 1.0, bopt));
  }
  // Every trained checkpoint.
  for (const TrainedRun& run : runs.get()) {
    const Tensor rxs = evaluation_contexts(run.gen, 1000);
    for (const auto& [beta, model] : run.models) {
      record(bound_check(model, run.world->truth, rxs, run.world->data, beta, bopt));
    }
  }
  // n = 2 equality.
  GenConfig g2c = gc;
  g2c.treatments = 2;
  const Generated g2 = generate(g2c);
  Model m2 = Model::initialize(model_config(g2.data.context_dim(), 2, 7, 32));
  randomize(m2, rng, 0.2);
  const PeheReport r2 = bound_check(m2, g2.truth, evaluation_contexts(g2c, 1000), g2.data, 1.0, bopt);
  const double eq_gap = std::abs(r2.pehe - r2.adjacent_sum);

  const bool pass = held == checked && eq_gap <= 1e-9;
  return {pass, "held on " + std::to_string(held) + "/" + std::to_string(checked) +
                    " pairs (max pehe/adjacent_sum " + fmt(worst_ratio) + "); n=2 gap " +
                    fmt(eq_gap) + "; weighted bound held on " + std::to_string(weighted_held) +
                    "/" + std::to_string(checked)};
}

// ---- 4 --------------------------------------------------------------------

Dataset random_dataset(std::size_t n, std::size_t rows, std::size_t d, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::vector<Sample> samples;
  for (std::size_t r = 0; r < rows; ++r) {
    Sample s;
    s.x.resize(d);
    for (double& v : s.x) v = z(rng);
    s.t = r < n ? static_cast<int>(r) + 1 : static_cast<int>(rng() % n) + 1;
    s.y = 2.0 + z(rng);
    samples.push_back(std::move(s));
  }
  return Dataset(n, d, std::move(samples));
}

Outcome gradients() {
  const auto start = Clock::now();
  std::mt19937_64 rng(104);
  const double h = 1e-5;
  std::size_t configs = 0, failed = 0;
  double worst_plain = 0.0, worst_ipm = 0.0;
  for (int kind = 0; kind < 3; ++kind) {  // factual, l2, ipm
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + rng() % 4, d = 2 + rng() % 3;
      const Dataset data = random_dataset(n, 4 * n + rng() % 8, d, rng);
      ModelConfig mc = model_config(d, n, rng(), 3 + rng() % 3);
      mc.rep_depth = 1 + rng() % 2;
      mc.hyp_depth = 1 + rng() % 2;
      mc.activation = trial % 2 == 0 ? Activation::kElu : Activation::kTanh;
      Model m = Model::initialize(mc);
      randomize(m, rng, 0.4);
      std::vector<std::size_t> rows(data.size());
      std::iota(rows.begin(), rows.end(), 0);
      const std::vector<double> mu = treatment_weights(data, rows);
      TrainConfig tc;
      tc.lambda = kind == 1 ? 0.3 : 0.0;
      tc.beta = kind == 2 ? 0.7 : 0.0;
      // The relative eps is a data-dependent constant with no gradient, which
      // finite differences would see; fix it for the check.
      tc.ipm.relative_epsilon = false;
      tc.ipm.epsilon = 0.2;
      tc.ipm.iterations = 30;

      Tape tape;
      const BoundParams p = m.bind(tape);
      tape.backward(build_objective(tape, m, p, data, rows, mu, tc).total);
      std::vector<Tensor> analytic;
      // Same order as Model::parameter_tensors().
      for (std::size_t l = 0; l < p.rep_weight.size(); ++l) {
        analytic.push_back(tape.grad(p.rep_weight[l]));
        analytic.push_back(tape.grad(p.rep_bias[l]));
      }
      for (std::size_t l = 0; l < p.hyp_weight.size(); ++l) {
        analytic.push_back(tape.grad(p.hyp_weight[l]));
        analytic.push_back(tape.grad(p.hyp_bias[l]));
      }

      double worst = 0.0;
      std::vector<Tensor*> params = m.parameter_tensors();
      for (std::size_t t = 0; t < params.size(); ++t) {
        Tensor& w = *params[t];
        for (std::size_t k = 0; k < w.size(); ++k) {
          const double orig = w[k];
          w[k] = orig + h;
          const double up = objective(m, data, rows, mu, tc).total;
          w[k] = orig - h;
          const double down = objective(m, data, rows, mu, tc).total;
          w[k] = orig;
          const double fd = (up - down) / (2 * h);
          const double a = analytic[t][k];
          worst = std::max(worst, std::abs(a - fd) / std::max({std::abs(a), std::abs(fd), 1e-4}));
        }
      }
      const double tol = kind == 2 ? 1e-3 : 1e-4;
      ++configs;
      failed += worst > tol;
      (kind == 2 ? worst_ipm : worst_plain) = std::max(kind == 2 ? worst_ipm : worst_plain, worst);
    }
  }
  const double secs = seconds_since(start);
  return {failed == 0 && configs >= 50 && secs < 120.0,
          std::to_string(configs - failed) + "/" + std::to_string(configs) +
              " configs within tolerance; worst rel error " + fmt(worst_plain) +
              " (factual, l2), " + fmt(worst_ipm) + " (ipm); " + fmt(secs) + " s"};
}

// ---- 5 --------------------------------------------------------------------

Outcome ipm_oracle() {
  std::mt19937_64 rng(105);
  std::normal_distribution<double> z;
  double worst_sinkhorn = 0.0;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> a(30 + trial), b(25 + 2 * trial);
    const double shift = 0.1 * trial;
    for (double& v : a) v = z(rng);
    for (double& v : b) v = shift + (1.0 + 0.02 * trial) * z(rng);
    const double exact = exact_wasserstein_1d(a, b);
    const double approx =
        ipm_distance(SampleCloud::from_1d(a), SampleCloud::from_1d(b), IpmConfig::evaluation())
            .distance;
    worst_sinkhorn = std::max(worst_sinkhorn, std::abs(approx - exact) / exact);
  }
  double worst_assign = 0.0;
  for (std::size_t n = 1; n <= 7; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> p(n), q(n);
      for (double& v : p) v = z(rng);
      for (double& v : q) v = z(rng) + 0.3;
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      double best = INFINITY;
      do {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) cost += std::abs(p[i] - q[perm[i]]);
        best = std::min(best, cost / static_cast<double>(n));
      } while (std::next_permutation(perm.begin(), perm.end()));
      worst_assign = std::max(worst_assign, std::abs(exact_wasserstein_1d(p, q) - best));
    }
  }
  return {worst_sinkhorn < 0.02 && worst_assign <= 1e-12,
          "sinkhorn max rel error " + fmt(worst_sinkhorn) + " over 30 clouds; assignment max gap " +
              fmt(worst_assign)};
}

// ---- 6 --------------------------------------------------------------------

Outcome coefficients() {
  std::mt19937_64 rng(106);
  double worst = 0.0;
  for (std::size_t n : {2u, 3u, 5u}) {
    for (int trial = 0; trial < 5; ++trial) {
      const Dataset data = random_dataset(n, 20 * n + rng() % 30, 4, rng);
      std::vector<std::size_t> all(data.size());
      std::iota(all.begin(), all.end(), 0);
      const std::vector<double> mu = treatment_weights(data, all);
      // A random minibatch of the data with the global weights.
      std::vector<std::size_t> batch = all;
      std::shuffle(batch.begin(), batch.end(), rng);
      batch.resize(batch.size() / 2);
      Model m = Model::initialize(model_config(4, n, rng(), 8));
      TrainConfig tc;
      tc.beta = 0.5;
      tc.lambda = 0.1;
      Tape tape;
      const BoundParams p = m.bind(tape);
      const ObjectiveGraph g = build_objective(tape, m, p, data, batch, mu, tc);
      tape.backward(g.total);
      const Tensor& got = tape.grad(g.losses);
      const std::vector<double> want = factual_coefficients(data, batch, mu);
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const int t = data[batch[i]].t;
        const bool endpoint = t == 1 || t == static_cast<int>(n);
        const double closed = mu[t - 1] * (2.0 - (endpoint ? 1.0 : 0.0)) / batch.size();
        worst = std::max({worst, std::abs(got[i] - closed), std::abs(want[i] - closed)});
      }
    }
  }
  return {worst <= 1e-12, "max coefficient deviation " + fmt(worst) + " for n in {2,3,5}"};
}

// ---- 7 --------------------------------------------------------------------

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t k = v.size() / 2;
  return v.size() % 2 == 1 ? v[k] : 0.5 * (v[k - 1] + v[k]);
}

Outcome selection_bias(TrainedRuns& runs) {
  std::map<double, std::vector<double>> beta0, beta1;
  for (const TrainedRun& r : runs.get()) {
    beta0[r.bias].push_back(r.pehe.at(0.0));
    beta1[r.bias].push_back(r.pehe.at(1.0));
  }
  const double b5_0 = median(beta0[5.0]), b5_1 = median(beta1[5.0]);
  const double b0_0 = median(beta0[0.0]), b0_1 = median(beta1[0.0]);
  const double rel = std::abs(b0_1 - b0_0) / std::max(b0_0, b0_1);
  const bool pass =
      b5_1 <= b5_0 && rel < 0.2 && runs.train_seconds() < 1800.0 && beta0[5.0].size() >= 10;
  return {pass, "b=5 median pehe beta1 " + fmt(b5_1) + " vs beta0 " + fmt(b5_0) +
                    "; b=0 median beta1 " + fmt(b0_1) + " vs beta0 " + fmt(b0_0) + " (rel diff " +
                    fmt(rel) + "); " + std::to_string(beta0[5.0].size()) + " seeds, " +
                    fmt(runs.train_seconds()) + " s"};
}

// ---- 8 --------------------------------------------------------------------

struct CalibrationCheck {
  bool pass = false;
  std::string detail;
};

CalibrationCheck calibration_on_log(std::uint64_t seed) {
  GenConfig gc;
  gc.samples = 200;
  gc.seed = seed;
  const Generated g = generate(gc);
  const OracleModel oracle(g.truth);
  SimConfig sc;
  sc.ads = 25;
  sc.history_days = 2;
  sc.days = 2;
  sc.opportunities_per_day = 10;
  sc.seed = seed;
  const World world = make_world(g.truth, gc.schema, sc);
  const AuctionLog log = world_log(world, sc);

  std::vector<double> sigma(sc.ads), base(sc.ads);
  std::vector<std::size_t> ads(sc.ads);
  std::iota(ads.begin(), ads.end(), 0);
  for (std::size_t a = 0; a < sc.ads; ++a) {
    sigma[a] = leverage_rate(oracle, world.contexts.row_span(a), 0, 1);
    base[a] = baseline_bid(world.params[a]);
  }
  const double sigma_bar = std::accumulate(sigma.begin(), sigma.end(), 0.0) / sc.ads;
  auto cost_at = [&](double kappa) {
    std::vector<double> bids(sc.ads);
    for (std::size_t a = 0; a < sc.ads; ++a) {
      BidParams p = world.params[a];
      p.kappa = kappa;
      p.sigma_bar = sigma_bar;
      bids[a] = bid(p, sigma[a]);
    }
    return replay(log, bids, ads, 0, log.days(), sc.seed).totals.cost;
  };
  const double target = replay(log, base, ads, 0, log.days(), sc.seed).totals.cost;
  CalibrationOptions copt;
  const CalibrationResult r = calibrate_kappa(cost_at, target, copt);

  // Dense grid: the curve must be monotone and bracket the calibrated point.
  const std::size_t points = 100;
  std::vector<double> kappas(points), costs(points);
  bool monotone = true;
  double best_grid_gap = INFINITY;
  for (std::size_t k = 0; k < points; ++k) {
    kappas[k] = copt.kappa_min * std::pow(copt.kappa_max / copt.kappa_min,
                                          static_cast<double>(k) / (points - 1));
    costs[k] = cost_at(kappas[k]);
    if (k > 0 && costs[k] < costs[k - 1]) monotone = false;
    best_grid_gap = std::min(best_grid_gap, std::abs(costs[k] - target) / target);
  }
  const auto hi = std::lower_bound(kappas.begin(), kappas.end(), r.kappa);
  bool bracketed = true;
  if (hi != kappas.end()) bracketed &= costs[hi - kappas.begin()] >= r.cost;
  if (hi != kappas.begin()) bracketed &= costs[hi - kappas.begin() - 1] <= r.cost;

  const bool pass = r.within_tolerance && std::abs(r.gap) <= 0.01 && r.steps <= 40 && monotone &&
                    bracketed && log.size() == 1000;
  return {pass, std::to_string(log.size()) + " auctions; kappa " + fmt(r.kappa) + ", gap " +
                    fmt(r.gap) + " in " + std::to_string(r.steps) + " steps; grid monotone " +
                    (monotone ? "yes" : "no") + ", bracketed " + (bracketed ? "yes" : "no") +
                    ", best grid gap " + fmt(best_grid_gap)};
}

// The fixed log decides the criterion; further logs show how often a
// +-1% band is reachable when single clicks move the cost in steps.
Outcome calibration() {
  const CalibrationCheck main = calibration_on_log(108);
  std::size_t others = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) others += calibration_on_log(1000 + seed).pass;
  return {main.pass, main.detail + "; " + std::to_string(others) + "/20 further logs within 1%"};
}

// ---- 9 --------------------------------------------------------------------

// One-sided sign test: P(X >= wins) for X ~ Binomial(trials, 1/2).
double sign_test(std::size_t wins, std::size_t trials) {
  double p = 0.0;
  for (std::size_t k = wins; k <= trials; ++k) {
    double c = 1.0;
    for (std::size_t i = 0; i < k; ++i) c = c * static_cast<double>(trials - i) / (i + 1);
    p += c * std::pow(0.5, static_cast<double>(trials));
  }
  return p;
}

Outcome experiment(TrainedRuns& runs) {
  std::size_t oracle_wins = 0, oracle_losses = 0, trained_wins = 0, seeds = 0;
  std::vector<double> ratios;
  for (const TrainedRun& run : runs.get()) {
    if (run.bias != 5.0) continue;
    ++seeds;
    SimConfig sc;
    sc.seed = run.seed;
    const World world = make_world(run.world->truth, run.gen.schema, sc);
    const AuctionLog log = world_log(world, sc);
    const OracleModel oracle(run.world->truth);
    const double oracle_ratio = run_experiment(oracle, world, log, sc).all_clicks_ratio();
    const double trained_ratio =
        run_experiment(run.models.at(1.0), world, log, sc).all_clicks_ratio();
    ratios.push_back(oracle_ratio);
    oracle_wins += oracle_ratio > 1.0;
    oracle_losses += oracle_ratio < 1.0;
    trained_wins += trained_ratio > 1.0;
    std::cerr << "  experiment seed " << run.seed << ": oracle ratio " << fmt(oracle_ratio)
              << ", trained ratio " << fmt(trained_ratio) << "\n";
  }
  const double p = sign_test(oracle_wins, oracle_wins + oracle_losses);
  const bool pass = seeds >= 10 && p < 0.05 && trained_wins >= 7 * seeds / 10;
  return {pass, "oracle lvr wins " + std::to_string(oracle_wins) + "/" +
                    std::to_string(oracle_wins + oracle_losses) + " (sign test p " + fmt(p) +
                    ", median all-clicks ratio " + fmt(median(ratios)) + "); trained beta=1 wins " +
                    std::to_string(trained_wins) + "/" + std::to_string(seeds)};
}

// ---- 10 -------------------------------------------------------------------

// Runs a command, returning its exit code and the last line it printed.
std::pair<int, std::string> shell(const std::string& cmd) {
  FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return {-1, "popen failed"};
  std::string text;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) text.append(buf, got);
  const int status = pclose(pipe);
  while (!text.empty() && text.back() == '\n') text.pop_back();
  const std::size_t nl = text.rfind('\n');
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1,
          nl == std::string::npos ? text : text.substr(nl + 1)};
}

Outcome reproducibility(const Options& opt) {
  const std::filesystem::path w = opt.work / "repro";
  std::filesystem::remove_all(w);
  const std::string cli = IAE_CLI_PATH;
  auto out = [&](const std::string& name) { return (w / name).string(); };
  const std::vector<std::pair<std::string, std::string>> runs = {
      {"generate", "generate --samples 600 --treatments 4 --seed 7 --out " + out("generate")},
      {"train", "train --data " + out("generate/data.csv") +
                    " --epochs 3 --batch-size 64 --rep-width 16 --hyp-width 16 --out " +
                    out("train")},
      {"evaluate", "evaluate --model " + out("train/model") + " --data " + out("generate/data.csv") +
                       " --contexts 200 --ipm-samples 50 --out " + out("evaluate")},
      {"simulate", "simulate --model " + out("train/model") + " --data " + out("generate/data.csv") +
                       " --ads 40 --days 3 --out " + out("simulate")},
  };
  std::size_t ok = 0;
  std::string failures;
  for (const auto& [name, args] : runs) {
    const auto [run_rc, run_msg] = shell(cli + " " + args);
    if (run_rc != 0) {
      failures += " " + name + " run (" + run_msg + ")";
      continue;
    }
    const auto [rc, msg] = shell(cli + " reproduce " + out(name + "/manifest.json") + " --out " +
                                 out(name + "_again"));
    if (rc == 0) {
      ++ok;
    } else {
      failures += " " + name + " (" + msg + ")";
    }
  }
  std::filesystem::remove_all(w);
  return {ok == runs.size(), std::to_string(ok) + "/" + std::to_string(runs.size()) +
                                 " commands reproduced bit-identically" +
                                 (failures.empty() ? "" : "; failed:" + failures)};
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  std::vector<int> only;
  CLI::App app{"Acceptance criteria"};
  app.add_option("--seeds", opt.seeds, "Seeds per setting for the training criteria")
      ->capture_default_str();
  app.add_option("--samples", opt.samples, "Samples per synthetic world")->capture_default_str();
  app.add_option("--epochs", opt.epochs, "Training epochs per run")->capture_default_str();
  app.add_option("--only", only, "Run only these criteria");
  app.add_flag("--strict", opt.strict, "Exit 1 when any criterion fails");
  CLI11_PARSE(app, argc, argv);
  opt.only.insert(only.begin(), only.end());
  opt.work = std::filesystem::temp_directory_path() /
             ("iae_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(opt.work);

  TrainedRuns runs(opt);
  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, matrix_properties},
      {2, telescoping},
      {3, [&] { return adjacent_bound(runs); }},
      {4, gradients},
      {5, ipm_oracle},
      {6, coefficients},
      {7, [&] { return selection_bias(runs); }},
      {8, calibration},
      {9, [&] { return experiment(runs); }},
      {10, [&] { return reproducibility(opt); }},
  };
  bool all_pass = true;
  int status = 0;
  for (const auto& [id, check] : criteria) {
    if (!opt.only.empty() && opt.only.count(id) == 0) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      status = 1;
    }
    all_pass &= o.pass;
    std::cout << "criterion " << id << ": " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail
              << std::endl;
  }
  std::filesystem::remove_all(opt.work);
  if (opt.strict && !all_pass) status = 1;
  return status;
}

}  // namespace iae::acceptance

int main(int argc, char** argv) { return iae::acceptance::main(argc, argv); }
