#include "iae/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

ExperimentPolicy parse_experiment_policy(const std::string& name) {
  if (name == "lvr") return ExperimentPolicy::kLvr;
  if (name == "baseline") return ExperimentPolicy::kBaseline;
  throw InputError("unknown experiment policy '" + name + "' (expected lvr or baseline)");
}

std::string experiment_policy_name(ExperimentPolicy p) {
  return p == ExperimentPolicy::kLvr ? "lvr" : "baseline";
}

void SimConfig::validate() const {
  if (ads < 2) throw InputError("simulate: need at least 2 ADs");
  if (history_days < 2) throw InputError("simulate: need at least 2 history days");
  if (days < 1) throw InputError("simulate: need at least 1 experiment day");
  if (opportunities_per_day < 1) throw InputError("simulate: need >= 1 opportunity per day");
  if (!(price_sigma >= 0.0) || !(price_ratio > 0.0)) {
    throw InputError("simulate: price sigma must be >= 0 and price ratio > 0");
  }
  if (!(click_prob_min >= 0.0 && click_prob_min <= click_prob_max && click_prob_max <= 1.0)) {
    throw InputError("simulate: click probability range must lie in [0, 1]");
  }
  if (!(gamma_min > 0.0 && gamma_min <= gamma_max)) throw InputError("simulate: bad gamma range");
  if (!(cvr_min >= 0.0 && cvr_min <= cvr_max && cvr_max <= 1.0)) {
    throw InputError("simulate: bad cvr range");
  }
  if (!(ip_min > 0.0 && ip_min <= ip_max)) throw InputError("simulate: bad item price range");
  if (!(experiment_fraction > 0.0 && experiment_fraction < 1.0)) {
    throw InputError("simulate: experiment fraction must lie in (0, 1)");
  }
}

nlohmann::json SimConfig::to_json() const {
  return {{"ads", ads},
          {"history_days", history_days},
          {"days", days},
          {"opportunities_per_day", opportunities_per_day},
          {"price_sigma", price_sigma},
          {"price_ratio", price_ratio},
          {"click_prob_min", click_prob_min},
          {"click_prob_max", click_prob_max},
          {"gamma_min", gamma_min},
          {"gamma_max", gamma_max},
          {"cvr_min", cvr_min},
          {"cvr_max", cvr_max},
          {"ip_min", ip_min},
          {"ip_max", ip_max},
          {"experiment_fraction", experiment_fraction},
          {"policy", experiment_policy_name(policy)},
          {"kappa_min", calibration.kappa_min},
          {"kappa_max", calibration.kappa_max},
          {"tolerance", calibration.tolerance},
          {"max_steps", calibration.max_steps},
          {"seed", seed}};
}

SimConfig SimConfig::from_json(const nlohmann::json& j) {
  SimConfig c;
  c.ads = j.at("ads").get<std::size_t>();
  c.history_days = j.at("history_days").get<std::size_t>();
  c.days = j.at("days").get<std::size_t>();
  c.opportunities_per_day = j.at("opportunities_per_day").get<std::size_t>();
  c.price_sigma = j.at("price_sigma").get<double>();
  c.price_ratio = j.at("price_ratio").get<double>();
  c.click_prob_min = j.at("click_prob_min").get<double>();
  c.click_prob_max = j.at("click_prob_max").get<double>();
  c.gamma_min = j.at("gamma_min").get<double>();
  c.gamma_max = j.at("gamma_max").get<double>();
  c.cvr_min = j.at("cvr_min").get<double>();
  c.cvr_max = j.at("cvr_max").get<double>();
  c.ip_min = j.at("ip_min").get<double>();
  c.ip_max = j.at("ip_max").get<double>();
  c.experiment_fraction = j.at("experiment_fraction").get<double>();
  c.policy = parse_experiment_policy(j.at("policy").get<std::string>());
  c.calibration.kappa_min = j.at("kappa_min").get<double>();
  c.calibration.kappa_max = j.at("kappa_max").get<double>();
  c.calibration.tolerance = j.at("tolerance").get<double>();
  c.calibration.max_steps = j.at("max_steps").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

namespace {

enum : std::uint64_t {
  kSaltContexts = 0x11,
  kSaltParams = 0x12,
  kSaltLog = 0x13,
  kSaltClicks = 0x14,
  kSaltResponse = 0x15,
  kSaltSplit = 0x16,
};

std::uint64_t salted(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt)};
  std::mt19937_64 rng(seq);
  return rng();
}

}  // namespace

World make_world(const GroundTruth& truth, const FeatureSchema& schema, const SimConfig& config) {
  config.validate();
  if (schema.dim() != truth.context_dim()) {
    throw InputError("simulate: feature schema does not match the ground truth");
  }
  World w;
  w.truth = truth;
  ContextSampler sampler(schema, salted(config.seed, kSaltContexts));
  w.contexts = sampler.draw(config.ads);
  std::mt19937_64 rng(salted(config.seed, kSaltParams));
  std::uniform_real_distribution<double> gamma(config.gamma_min, config.gamma_max);
  std::uniform_real_distribution<double> cvr(config.cvr_min, config.cvr_max);
  std::uniform_real_distribution<double> ip(config.ip_min, config.ip_max);
  for (std::size_t a = 0; a < config.ads; ++a) {
    BidParams p;
    p.gamma = gamma(rng);
    p.cvr = cvr(rng);
    p.ip = ip(rng);
    w.params.push_back(p);
  }
  return w;
}

AuctionLog world_log(const World& world, const SimConfig& config) {
  LogConfig lc;
  lc.ads = config.ads;
  lc.days = config.total_days();
  lc.opportunities_per_day = config.opportunities_per_day;
  lc.price_sigma = config.price_sigma;
  lc.click_prob_min = config.click_prob_min;
  lc.click_prob_max = config.click_prob_max;
  lc.seed = salted(config.seed, kSaltLog);
  std::vector<double> reference(config.ads);
  for (std::size_t a = 0; a < config.ads; ++a) {
    reference[a] = config.price_ratio * world.params[a].value();
  }
  return generate_log(lc, reference);
}

ResponseFn world_response(const World& world, std::uint64_t seed) {
  const World* w = &world;
  const std::uint64_t key = salted(seed, kSaltResponse);
  return [w, key](std::size_t ad, std::size_t day, std::size_t ad_clicks) {
    const GroundTruth& gt = w->truth;
    const int t = clicks_to_treatment(ad_clicks, gt.treatments());
    const double mean = gt.mean_outcome(w->contexts.row_span(ad), t);
    // Box-Muller on two keyed uniforms.
    const double u1 = 1.0 - keyed_uniform(key, ad, day, 0);
    const double u2 = keyed_uniform(key, ad, day, 1);
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return std::max(0.0, mean + gt.noise() * z);
  };
}

double ExperimentReport::all_clicks_ratio() const {
  return experiment_test.all_clicks / experiment_baseline_test.all_clicks;
}

double ExperimentReport::ad_clicks_ratio() const {
  return experiment_test.ad_clicks / experiment_baseline_test.ad_clicks;
}

double ExperimentReport::organic_ratio() const {
  return experiment_test.organic_clicks / experiment_baseline_test.organic_clicks;
}

double ExperimentReport::cost_gap() const {
  return (experiment_test.cost - experiment_baseline_test.cost) / experiment_baseline_test.cost;
}

double ExperimentReport::all_clicks_vs_control() const {
  const double test = experiment_test.all_clicks / control_test.all_clicks;
  const double pre = experiment_pre.all_clicks / control_pre.all_clicks;
  return test / pre;
}

nlohmann::json ExperimentReport::to_json() const {
  nlohmann::json lvr_rows = nlohmann::json::array();
  for (const LvrRecord& r : lvr) {
    lvr_rows.push_back({{"ad_id", r.ad_id}, {"s", r.s}, {"t", r.t}, {"sigma", r.sigma}});
  }
  nlohmann::json cal = nlohmann::json::array();
  for (const CalibrationResult& c : calibration) cal.push_back(c.to_json());
  return {{"config", config.to_json()},
          {"sigma_bar", sigma_bar},
          {"ineligible_ads", ineligible_ads},
          {"groups",
           {{"experiment",
             {{"ads", experiment_ads.size()},
              {"policy", experiment_policy_name(config.policy)},
              {"pre", experiment_pre.to_json()},
              {"test", experiment_test.to_json()},
              {"baseline_test", experiment_baseline_test.to_json()}}},
            {"control",
             {{"ads", control_ads.size()},
              {"pre", control_pre.to_json()},
              {"test", control_test.to_json()}}}}},
          {"ratios",
           {{"ad_clicks", ad_clicks_ratio()},
            {"all_clicks", all_clicks_ratio()},
            {"organic_clicks", organic_ratio()},
            {"cost_gap", cost_gap()},
            {"all_clicks_vs_control", all_clicks_vs_control()}}},
          {"lvr", lvr_rows},
          {"calibration", cal}};
}

std::string ExperimentReport::series_csv() const {
  const auto pre_days = static_cast<double>(config.history_days);
  auto per_day = [pre_days](const ReplayTotals& t) {
    ReplayTotals m = t;
    m.ad_clicks /= pre_days;
    m.all_clicks /= pre_days;
    m.organic_clicks /= pre_days;
    return m;
  };
  const ReplayTotals ep = per_day(experiment_pre);
  const ReplayTotals cp = per_day(control_pre);
  auto ratio = [](double a, double b) { return b != 0.0 ? a / b : 0.0; };
  std::string out =
      "day,phase,kappa,exp_ad,exp_all,exp_organic,ctl_ad,ctl_all,ctl_organic,"
      "exp_all_per_ad,exp_organic_per_ad\n";
  for (const DayRecord& d : series) {
    const ReplayTotals& e = d.experiment;
    const ReplayTotals& c = d.control;
    const double all_per_ad = ratio(ratio(e.all_clicks, e.ad_clicks),
                                    ratio(ep.all_clicks, ep.ad_clicks));
    const double org_per_ad = ratio(ratio(e.organic_clicks, e.ad_clicks),
                                    ratio(ep.organic_clicks, ep.ad_clicks));
    out += std::to_string(d.day) + "," + (d.treatment_on ? "test" : "pre") + "," +
           io::format_double(d.kappa) + "," + io::format_double(ratio(e.ad_clicks, ep.ad_clicks)) +
           "," + io::format_double(ratio(e.all_clicks, ep.all_clicks)) + "," +
           io::format_double(ratio(e.organic_clicks, ep.organic_clicks)) + "," +
           io::format_double(ratio(c.ad_clicks, cp.ad_clicks)) + "," +
           io::format_double(ratio(c.all_clicks, cp.all_clicks)) + "," +
           io::format_double(ratio(c.organic_clicks, cp.organic_clicks)) + "," +
           io::format_double(all_per_ad) + "," + io::format_double(org_per_ad) + "\n";
  }
  return out;
}

ExperimentReport run_experiment(const OutcomeModel& model, const World& world,
                                const AuctionLog& log, const SimConfig& config) {
  config.validate();
  if (world.params.size() != config.ads || world.contexts.rows() != config.ads) {
    throw InputError("simulate: world does not match the configured AD count");
  }
  if (log.ads() != config.ads || log.days() != config.total_days()) {
    throw InputError("simulate: auction log covers " + std::to_string(log.ads()) + " ADs x " +
                     std::to_string(log.days()) + " days, expected " +
                     std::to_string(config.ads) + " x " + std::to_string(config.total_days()));
  }
  if (model.treatments() != world.truth.treatments() ||
      model.context_dim() != world.truth.context_dim()) {
    throw InputError("simulate: model does not match the simulated world");
  }
  const std::size_t h = config.history_days;
  const std::size_t end = config.total_days();
  const std::uint64_t click_seed = salted(config.seed, kSaltClicks);
  const ResponseFn response = world_response(world, config.seed);

  ExperimentReport rep;
  rep.config = config;

  std::vector<double> baseline(config.ads);
  for (std::size_t a = 0; a < config.ads; ++a) baseline[a] = baseline_bid(world.params[a]);
  std::vector<std::size_t> all_ads(config.ads);
  std::iota(all_ads.begin(), all_ads.end(), 0);
  const ReplayResult history = replay(log, baseline, all_ads, 0, h, click_seed, response);

  // Random split, then drop experiment ADs without a usable click history.
  std::vector<std::size_t> order = all_ads;
  std::mt19937_64 split_rng(salted(config.seed, kSaltSplit));
  std::shuffle(order.begin(), order.end(), split_rng);
  const auto n_exp = static_cast<std::size_t>(
      std::llround(config.experiment_fraction * static_cast<double>(config.ads)));
  std::vector<std::size_t> sampled(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_exp));
  rep.control_ads.assign(order.begin() + static_cast<std::ptrdiff_t>(n_exp), order.end());
  std::sort(sampled.begin(), sampled.end());
  for (std::size_t a : sampled) {
    std::vector<std::size_t> clicks(h);
    for (std::size_t d = 0; d < h; ++d) clicks[d] = history.rows[a * h + d].ad_clicks;
    try {
      rep.lvr.push_back(nominal_lvr(model, world.contexts.row_span(a), a, clicks));
      rep.experiment_ads.push_back(a);
    } catch (const InputError&) {
      ++rep.ineligible_ads;
      rep.control_ads.push_back(a);
    }
  }
  std::sort(rep.control_ads.begin(), rep.control_ads.end());
  if (rep.experiment_ads.empty()) throw InputError("simulate: no experiment AD has a usable history");
  double sigma_sum = 0.0;
  for (const LvrRecord& r : rep.lvr) sigma_sum += r.sigma;
  rep.sigma_bar = sigma_sum / static_cast<double>(rep.lvr.size());
  if (config.policy == ExperimentPolicy::kLvr && !(rep.sigma_bar > 0.0)) {
    throw NumericError("simulate: mean leverage rate of the experiment group is not positive (" +
                       std::to_string(rep.sigma_bar) + ")");
  }

  auto policy_bids = [&](double kappa) {
    std::vector<double> bids = baseline;
    if (config.policy == ExperimentPolicy::kBaseline) return bids;
    for (const LvrRecord& r : rep.lvr) {
      BidParams p = world.params[r.ad_id];
      p.kappa = kappa;
      p.sigma_bar = rep.sigma_bar;
      bids[r.ad_id] = bid(p, r.sigma);
    }
    return bids;
  };

  for (std::size_t d = 0; d < h; ++d) {
    DayRecord rec;
    rec.day = d;
    for (const AdDayOutcome& row : history.rows) {
      if (row.day != d) continue;
      if (std::binary_search(rep.experiment_ads.begin(), rep.experiment_ads.end(), row.ad_id)) {
        rec.experiment += row.totals;
      } else {
        rec.control += row.totals;
      }
    }
    rec.experiment_baseline = rec.experiment;
    rep.experiment_pre += rec.experiment;
    rep.control_pre += rec.control;
    rep.series.push_back(rec);
  }

  for (std::size_t d = h; d < end; ++d) {
    DayRecord rec;
    rec.day = d;
    rec.treatment_on = true;
    const ReplayResult base =
        replay(log, baseline, rep.experiment_ads, d, d + 1, click_seed, response);
    rec.experiment_baseline = base.totals;
    double kappa = 1.0;
    if (config.policy == ExperimentPolicy::kLvr) {
      if (!(base.totals.cost > 0.0)) {
        throw CalibrationError("simulate: baseline cost of the experiment group is 0 on day " +
                               std::to_string(d));
      }
      auto cost_at = [&](double k) {
        return replay(log, policy_bids(k), rep.experiment_ads, d, d + 1, click_seed).totals.cost;
      };
      rep.calibration.push_back(calibrate_kappa(cost_at, base.totals.cost, config.calibration));
      kappa = rep.calibration.back().kappa;
    }
    rec.kappa = kappa;
    rec.experiment =
        replay(log, policy_bids(kappa), rep.experiment_ads, d, d + 1, click_seed, response).totals;
    rec.control = replay(log, baseline, rep.control_ads, d, d + 1, click_seed, response).totals;
    rep.experiment_test += rec.experiment;
    rep.experiment_baseline_test += rec.experiment_baseline;
    rep.control_test += rec.control;
    rep.series.push_back(rec);
  }
  return rep;
}

}  // namespace iae
