#pragma once

// Single-slot second-price pay-per-click auction replay.
//
// AuctionLog CSV header: ad_id,day,opportunity_id,competing_price,click_prob
// (ids and days are 0-based integers).

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace iae {

struct Opportunity {
  std::size_t ad_id = 0;
  std::size_t day = 0;
  std::size_t opportunity_id = 0;
  double competing_price = 0.0;  // top competing bid; the second price if we win
  double click_prob = 0.0;

  bool operator==(const Opportunity&) const = default;
};

class AuctionLog {
 public:
  AuctionLog() = default;
  // Validates prices > 0 and click probabilities in [0, 1]; stores the
  // opportunities sorted by (ad, day, opportunity id).
  explicit AuctionLog(std::vector<Opportunity> opportunities);

  std::size_t ads() const { return ads_; }
  std::size_t days() const { return days_; }
  std::size_t size() const { return ops_.size(); }
  const std::vector<Opportunity>& opportunities() const { return ops_; }
  // Opportunities of one AD on one day.
  std::span<const Opportunity> slot(std::size_t ad, std::size_t day) const;

  std::string to_csv() const;
  static AuctionLog from_csv(const std::string& text, const std::string& source);
  void save(const std::filesystem::path& path) const;
  static AuctionLog load(const std::filesystem::path& path);

  bool operator==(const AuctionLog& other) const { return ops_ == other.ops_; }

 private:
  std::vector<Opportunity> ops_;
  std::vector<std::size_t> offsets_;  // (ad * days + day) -> first index, plus end
  std::size_t ads_ = 0;
  std::size_t days_ = 0;
};

struct LogConfig {
  std::size_t ads = 200;
  std::size_t days = 12;
  std::size_t opportunities_per_day = 10;
  // Competing prices are log-normal around each AD's reference price.
  double price_sigma = 0.5;
  double click_prob_min = 0.05;
  double click_prob_max = 0.3;
  std::uint64_t seed = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static LogConfig from_json(const nlohmann::json& j);
};

// `reference_prices` holds one median competing price per AD.
AuctionLog generate_log(const LogConfig& config, std::span<const double> reference_prices);

// All-channel clicks of (ad, day) given the realized advertising clicks.
using ResponseFn = std::function<double(std::size_t ad, std::size_t day, std::size_t ad_clicks)>;

struct ReplayTotals {
  double ad_clicks = 0.0;
  double cost = 0.0;
  double all_clicks = 0.0;
  double organic_clicks = 0.0;  // all_clicks - ad_clicks

  ReplayTotals& operator+=(const ReplayTotals& o);
  bool operator==(const ReplayTotals&) const = default;
  nlohmann::json to_json() const;
};

struct AdDayOutcome {
  std::size_t ad_id = 0;
  std::size_t day = 0;
  std::size_t ad_clicks = 0;
  ReplayTotals totals;
};

struct ReplayResult {
  std::vector<AdDayOutcome> rows;  // ordered by (ad, day)
  ReplayTotals totals;
};

// Replays days [first_day, last_day) for the listed ADs. An AD wins an
// opportunity iff its bid exceeds the competing price; a won opportunity is
// clicked iff a uniform draw keyed by (seed, ad, day, opportunity) falls below
// its click probability, and each click costs the competing price. The draw
// does not depend on the bids, so cost is monotone in every bid. Without a
// response function all-channel clicks equal advertising clicks.
ReplayResult replay(const AuctionLog& log, std::span<const double> bids,
                    std::span<const std::size_t> ads, std::size_t first_day,
                    std::size_t last_day, std::uint64_t seed, const ResponseFn& response = {});

// Uniform in [0, 1) from a counter-based hash of the key.
double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c);

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CalibrationOptions {
  double kappa_min = 0.1;
  double kappa_max = 10.0;
  double tolerance = 0.01;  // relative cost gap
  std::size_t max_steps = 40;
};

struct CalibrationResult {
  double kappa = 1.0;
  double cost = 0.0;
  double target = 0.0;
  double gap = 0.0;  // (cost - target) / target
  std::size_t steps = 0;  // bisection midpoints evaluated
  bool within_tolerance = false;
  std::string warning;
  std::vector<std::pair<double, double>> trace;  // (kappa, cost) in evaluation order

  nlohmann::json to_json() const;
};

// Bisection (geometric midpoints) over kappa for a cost curve that is
// non-decreasing in kappa. kappa = 1 is tried first. Returns the first kappa
// within tolerance, or the closest point seen with a warning when the curve
// steps over the tolerance band. Throws CalibrationError when the target lies
// outside [cost(kappa_min), cost(kappa_max)] by more than the tolerance.
CalibrationResult calibrate_kappa(const std::function<double(double)>& cost_at,
                                  double baseline_cost, const CalibrationOptions& options = {});

}  // namespace iae
