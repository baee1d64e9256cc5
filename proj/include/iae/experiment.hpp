#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "iae/auction.hpp"
#include "iae/dataset.hpp"
#include "iae/lvr.hpp"
#include "iae/outcome_model.hpp"
#include "iae/synthetic.hpp"
#include "json.hpp"

namespace iae {

enum class ExperimentPolicy { kLvr, kBaseline };

ExperimentPolicy parse_experiment_policy(const std::string& name);
std::string experiment_policy_name(ExperimentPolicy p);

struct SimConfig {
  std::size_t ads = 200;
  std::size_t history_days = 5;
  std::size_t days = 7;  // experiment days after the history window
  std::size_t opportunities_per_day = 10;
  double price_sigma = 0.5;
  // Median competing price as a multiple of the AD's baseline bid.
  double price_ratio = 1.0;
  double click_prob_min = 0.05;
  double click_prob_max = 0.3;
  double gamma_min = 0.5, gamma_max = 1.5;
  double cvr_min = 0.02, cvr_max = 0.08;
  double ip_min = 10.0, ip_max = 100.0;
  double experiment_fraction = 0.5;
  // Policy of the experiment group; kBaseline gives an A/A test.
  ExperimentPolicy policy = ExperimentPolicy::kLvr;
  CalibrationOptions calibration;
  std::uint64_t seed = 1;

  std::size_t total_days() const { return history_days + days; }
  void validate() const;
  nlohmann::json to_json() const;
  static SimConfig from_json(const nlohmann::json& j);
};

// ADs of the simulated market: contexts from the generator's distribution and
// per-AD value factors.
struct World {
  GroundTruth truth;
  Tensor contexts;  // one row per AD
  std::vector<BidParams> params;
};

World make_world(const GroundTruth& truth, const FeatureSchema& schema, const SimConfig& config);

// Log with competing prices centred on price_ratio * baseline bid per AD.
AuctionLog world_log(const World& world, const SimConfig& config);

// All-channel clicks m_{k+1}(x_a) (k binned at n - 1) plus Gaussian noise of
// the ground truth's level, clipped at 0. The noise is keyed by (seed, ad,
// day) so every policy sees the same draw.
ResponseFn world_response(const World& world, std::uint64_t seed);

struct DayRecord {
  std::size_t day = 0;
  bool treatment_on = false;
  double kappa = 1.0;
  ReplayTotals experiment;           // experiment group under its policy
  ReplayTotals experiment_baseline;  // same ADs replayed with baseline bids
  ReplayTotals control;
};

struct ExperimentReport {
  SimConfig config;
  std::vector<std::size_t> experiment_ads;
  std::vector<std::size_t> control_ads;
  std::size_t ineligible_ads = 0;  // sampled for the experiment, no usable history
  std::vector<LvrRecord> lvr;
  double sigma_bar = 0.0;
  std::vector<CalibrationResult> calibration;  // one per experiment day
  std::vector<DayRecord> series;

  ReplayTotals experiment_pre, experiment_test, experiment_baseline_test;
  ReplayTotals control_pre, control_test;

  // Experiment group under its policy relative to the same ADs under baseline
  // bids over the experiment days.
  double all_clicks_ratio() const;
  double ad_clicks_ratio() const;
  double organic_ratio() const;
  double cost_gap() const;
  // Experiment / control all-channel ratio in the test window divided by the
  // same ratio in the history window.
  double all_clicks_vs_control() const;

  nlohmann::json to_json() const;
  // Per day, normalized by each group's pre-period daily mean:
  // day,phase,kappa,exp_ad,exp_all,exp_organic,ctl_ad,ctl_all,ctl_organic,
  // exp_all_per_ad,exp_organic_per_ad
  std::string series_csv() const;
};

// History window replayed with baseline bids for every AD, random experiment
// and control split, nominal lvr per experiment AD (ADs without a usable
// history join the control group), daily kappa calibration to the experiment
// group's baseline cost, then replay of the experiment window.
ExperimentReport run_experiment(const OutcomeModel& model, const World& world,
                                const AuctionLog& log, const SimConfig& config);

}  // namespace iae
