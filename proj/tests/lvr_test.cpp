#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "iae/auction.hpp"
#include "iae/error.hpp"
#include "iae/experiment.hpp"
#include "iae/lvr.hpp"
#include "iae/synthetic.hpp"
#include "test_util.hpp"

namespace iae {
namespace {

// f(x, T_i) = table[i - 1] regardless of x.
class TableModel : public OutcomeModel {
 public:
  explicit TableModel(std::vector<double> table) : table_(std::move(table)) {}
  std::size_t treatments() const override { return table_.size(); }
  std::size_t context_dim() const override { return 1; }
  double predict(std::span<const double>, int t) const override { return table_[t - 1]; }

 private:
  std::vector<double> table_;
};

const std::vector<double> kX = {0.0};

TEST(LvrTest, LeverageRateExamples) {
  const TableModel m({10, 14, 16, 17});
  EXPECT_DOUBLE_EQ(leverage_rate(m, kX, 0, 1), 4.0);
  EXPECT_DOUBLE_EQ(leverage_rate(m, kX, 0, 2), 3.0);
  EXPECT_DOUBLE_EQ(leverage_rate(m, kX, 1, 3), 1.5);
  for (std::size_t s = 0; s < 4; ++s) {
    for (std::size_t t = 0; t < 4; ++t) {
      if (s != t) EXPECT_DOUBLE_EQ(leverage_rate(m, kX, s, t), leverage_rate(m, kX, t, s));
    }
  }
  EXPECT_THROW(leverage_rate(m, kX, 2, 2), InputError);
  EXPECT_THROW(leverage_rate(m, kX, 0, 4), InputError);
}

// With a concave outcome curve small click changes have larger rates.
TEST(LvrTest, ConcaveCurveFavoursSmallSteps) {
  const Generated g = [] {
    GenConfig c;
    c.samples = 100;
    return generate(c);
  }();
  const OracleModel m(g.truth);
  for (std::size_t r = 0; r < 10; ++r) {
    const auto x = g.data[r].x;
    EXPECT_GE(leverage_rate(m, x, 0, 1), leverage_rate(m, x, 0, 4) - 1e-12);
    EXPECT_GE(leverage_rate(m, x, 1, 2), leverage_rate(m, x, 3, 4) - 1e-12);
  }
}

TEST(LvrTest, ClicksAreBinnedAtTopLevel) {
  EXPECT_EQ(clicks_to_treatment(0, 5), 1);
  EXPECT_EQ(clicks_to_treatment(3, 5), 4);
  EXPECT_EQ(clicks_to_treatment(4, 5), 5);
  EXPECT_EQ(clicks_to_treatment(40, 5), 5);
}

TEST(LvrTest, NominalLvrUsesMostRecentDifferentDay) {
  const TableModel m({10, 14, 16, 17});
  const std::vector<std::size_t> history = {0, 3, 1, 9, 3};
  const LvrRecord r = nominal_lvr(m, kX, 7, history);
  EXPECT_EQ(r.ad_id, 7u);
  EXPECT_EQ(r.t, 3u);
  EXPECT_EQ(r.s, 1u);
  EXPECT_DOUBLE_EQ(r.sigma, 1.5);
  try {
    nominal_lvr(m, kX, 2, std::vector<std::size_t>{3, 5, 3});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("missing history"), std::string::npos);
  }
  EXPECT_THROW(nominal_lvr(m, kX, 2, std::vector<std::size_t>{1}), InputError);
}

TEST(BidTest, Examples) {
  BidParams p;
  p.gamma = 2;
  p.cvr = 0.05;
  p.ip = 100;
  p.kappa = 1;
  p.sigma_bar = 0.4;
  EXPECT_DOUBLE_EQ(bid(p, 0.4), 10.0);
  EXPECT_DOUBLE_EQ(baseline_bid(p), 10.0);
  EXPECT_DOUBLE_EQ(bid(p, 0.8), 2 * bid(p, 0.4));
  p.kappa = 0;
  EXPECT_DOUBLE_EQ(bid(p, 0.4), p.floor_fraction * 10.0);
  p.kappa = 1;
  EXPECT_DOUBLE_EQ(bid(p, -3.0), p.floor_fraction * 10.0);
  p.sigma_bar = 0;
  EXPECT_THROW(bid(p, 1.0), InputError);
}

AuctionLog small_log(std::uint64_t seed = 1) {
  LogConfig c;
  c.ads = 6;
  c.days = 4;
  c.opportunities_per_day = 12;
  c.seed = seed;
  return generate_log(c, std::vector<double>(6, 5.0));
}

TEST(AuctionTest, HandReplayExample) {
  const AuctionLog log({{0, 0, 0, 2.0, 1.0}, {0, 0, 1, 5.0, 1.0}, {0, 0, 2, 3.0, 0.0},
                        {1, 0, 0, 1.0, 1.0}});
  const std::vector<double> bids = {4.0, 0.5};
  const std::vector<std::size_t> ads = {0, 1};
  const ReplayResult r = replay(log, bids, ads, 0, 1, 9);
  // AD 0 wins opportunities 0 and 2; only opportunity 0 can be clicked.
  EXPECT_EQ(r.rows[0].ad_clicks, 1u);
  EXPECT_DOUBLE_EQ(r.rows[0].totals.cost, 2.0);
  EXPECT_EQ(r.rows[1].ad_clicks, 0u);
  EXPECT_DOUBLE_EQ(r.totals.cost, 2.0);
  EXPECT_DOUBLE_EQ(r.totals.all_clicks, r.totals.ad_clicks);
  const ReplayResult with_response =
      replay(log, bids, ads, 0, 1, 9, [](std::size_t, std::size_t, std::size_t k) {
        return 10.0 + static_cast<double>(k);
      });
  EXPECT_DOUBLE_EQ(with_response.totals.all_clicks, 21.0);
  EXPECT_DOUBLE_EQ(with_response.totals.organic_clicks, 20.0);
}

TEST(AuctionTest, ReplayIsDeterministicAndCostMonotoneInBid) {
  const AuctionLog log = small_log();
  std::vector<std::size_t> ads(6);
  std::iota(ads.begin(), ads.end(), 0);
  double prev = -1.0;
  for (double b = 0.5; b < 40.0; b *= 1.3) {
    const std::vector<double> bids(6, b);
    const ReplayResult a = replay(log, bids, ads, 0, 4, 3);
    EXPECT_EQ(a.totals, replay(log, bids, ads, 0, 4, 3).totals);
    EXPECT_GE(a.totals.cost, prev);
    prev = a.totals.cost;
  }
  EXPECT_GT(prev, 0.0);
  EXPECT_THROW(replay(log, std::vector<double>(3, 1.0), ads, 0, 4, 3), InputError);
  EXPECT_THROW(replay(log, std::vector<double>(6, 1.0), ads, 3, 2, 3), InputError);
}

TEST(AuctionTest, KeyedUniformIsInUnitIntervalAndKeyed) {
  double sum = 0.0;
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const double u = keyed_uniform(1, k, 2, 3);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 10000, 0.5, 0.01);
  EXPECT_EQ(keyed_uniform(1, 2, 3, 4), keyed_uniform(1, 2, 3, 4));
  EXPECT_NE(keyed_uniform(1, 2, 3, 4), keyed_uniform(1, 2, 4, 3));
}

TEST(AuctionTest, CsvRoundTripAndValidation) {
  testing::TempDir dir("log");
  const AuctionLog log = small_log(2);
  EXPECT_EQ(log.ads(), 6u);
  EXPECT_EQ(log.days(), 4u);
  EXPECT_EQ(log.size(), 6u * 4u * 12u);
  EXPECT_EQ(log.slot(2, 3).size(), 12u);
  log.save(dir / "log.csv");
  EXPECT_TRUE(AuctionLog::load(dir / "log.csv") == log);
  EXPECT_THROW(AuctionLog({{0, 0, 0, -1.0, 0.5}}), InputError);
  EXPECT_THROW(AuctionLog({{0, 0, 0, 1.0, 1.5}}), InputError);
  EXPECT_THROW(AuctionLog::from_csv("ad_id,day,opportunity_id,competing_price,click_prob\n0,0,x,1,0.1\n",
                                    "mem"),
               InputError);
  EXPECT_EQ(small_log(2), log);
}

TEST(CalibrationTest, UniformRatesGiveUnitKappa) {
  // All sigma equal: the lvr bids are the baseline bids at kappa = 1.
  const AuctionLog log = small_log(3);
  std::vector<std::size_t> ads(6);
  std::iota(ads.begin(), ads.end(), 0);
  const std::vector<double> base(6, 5.0);
  const double target = replay(log, base, ads, 0, 4, 1).totals.cost;
  CalibrationOptions opt;
  opt.tolerance = 0.0;
  const CalibrationResult r = calibrate_kappa(
      [&](double k) {
        std::vector<double> b(6);
        for (std::size_t a = 0; a < 6; ++a) b[a] = k * base[a];
        return replay(log, b, ads, 0, 4, 1).totals.cost;
      },
      target, opt);
  EXPECT_TRUE(r.within_tolerance);
  EXPECT_EQ(r.kappa, 1.0);
  EXPECT_EQ(r.steps, 0u);
}

TEST(CalibrationTest, LinearCurveConverges) {
  const CalibrationResult r = calibrate_kappa([](double k) { return 100.0 * k; }, 237.0);
  EXPECT_TRUE(r.within_tolerance);
  EXPECT_NEAR(r.kappa, 2.37, 0.03);
  EXPECT_LE(std::abs(r.gap), 0.01);
  // Each kappa is evaluated once.
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    for (std::size_t j = i + 1; j < r.trace.size(); ++j) {
      EXPECT_NE(r.trace[i].first, r.trace[j].first);
    }
  }
}

TEST(CalibrationTest, StepCurveReturnsClosestWithWarning) {
  const CalibrationResult r =
      calibrate_kappa([](double k) { return k < 2.0 ? 50.0 : 150.0; }, 100.0);
  EXPECT_FALSE(r.within_tolerance);
  EXPECT_FALSE(r.warning.empty());
  EXPECT_NEAR(std::abs(r.gap), 0.5, 1e-12);
}

TEST(CalibrationTest, FlatCurveOutsideBracketFails) {
  EXPECT_THROW(calibrate_kappa([](double) { return 10.0; }, 100.0), CalibrationError);
  EXPECT_THROW(calibrate_kappa([](double k) { return k; }, 100.0), CalibrationError);
  EXPECT_THROW(calibrate_kappa([](double k) { return k; }, 0.0), InputError);
}

struct Market {
  Generated gen;
  World world;
  AuctionLog log;
  SimConfig sim;
};

Market market(ExperimentPolicy policy, std::uint64_t seed = 1) {
  GenConfig gc;
  gc.samples = 200;
  gc.seed = seed;
  Market m{generate(gc), {}, {}, {}};
  m.sim.ads = 60;
  m.sim.history_days = 4;
  m.sim.days = 3;
  m.sim.opportunities_per_day = 15;
  m.sim.policy = policy;
  m.sim.seed = seed;
  m.world = make_world(m.gen.truth, gc.schema, m.sim);
  m.log = world_log(m.world, m.sim);
  return m;
}

TEST(ExperimentTest, AaTestGivesUnitRatios) {
  const Market m = market(ExperimentPolicy::kBaseline);
  const OracleModel oracle(m.gen.truth);
  const ExperimentReport r = run_experiment(oracle, m.world, m.log, m.sim);
  EXPECT_DOUBLE_EQ(r.all_clicks_ratio(), 1.0);
  EXPECT_DOUBLE_EQ(r.ad_clicks_ratio(), 1.0);
  EXPECT_DOUBLE_EQ(r.cost_gap(), 0.0);
  for (const CalibrationResult& c : r.calibration) EXPECT_EQ(c.kappa, 1.0);
}

TEST(ExperimentTest, GroupsPartitionAdsAndSeriesIsComplete) {
  const Market m = market(ExperimentPolicy::kLvr, 2);
  const OracleModel oracle(m.gen.truth);
  const ExperimentReport r = run_experiment(oracle, m.world, m.log, m.sim);
  std::vector<std::size_t> all = r.experiment_ads;
  all.insert(all.end(), r.control_ads.begin(), r.control_ads.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), m.sim.ads);
  for (std::size_t a = 0; a < all.size(); ++a) EXPECT_EQ(all[a], a);
  EXPECT_EQ(r.lvr.size(), r.experiment_ads.size());
  EXPECT_EQ(r.series.size(), m.sim.total_days());
  EXPECT_EQ(r.calibration.size(), m.sim.days);
  double mean = 0.0;
  for (const LvrRecord& l : r.lvr) mean += l.sigma / static_cast<double>(r.lvr.size());
  EXPECT_NEAR(r.sigma_bar, mean, 1e-12);
  const std::string csv = r.series_csv();
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'),
            static_cast<std::ptrdiff_t>(m.sim.total_days() + 1));
}

TEST(ExperimentTest, SameSeedGivesIdenticalReport) {
  const Market a = market(ExperimentPolicy::kLvr, 3);
  const Market b = market(ExperimentPolicy::kLvr, 3);
  const OracleModel oracle(a.gen.truth);
  EXPECT_EQ(run_experiment(oracle, a.world, a.log, a.sim).to_json(),
            run_experiment(oracle, b.world, b.log, b.sim).to_json());
}

TEST(ExperimentTest, ConfigValidationAndPolicyNames) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(SimConfig::from_json(c.to_json()).to_json(), c.to_json());
  c.experiment_fraction = 1.5;
  EXPECT_THROW(c.validate(), InputError);
  c = SimConfig{};
  c.history_days = 1;
  EXPECT_THROW(c.validate(), InputError);
  EXPECT_EQ(parse_experiment_policy("lvr"), ExperimentPolicy::kLvr);
  EXPECT_THROW(parse_experiment_policy("greedy"), InputError);
}

}  // namespace
}  // namespace iae
