#pragma once

#include <cstddef>
#include <span>

#include "iae/outcome_model.hpp"

namespace iae {

// Daily advertising clicks k map to treatment index min(k, n - 1) + 1.
int clicks_to_treatment(std::size_t clicks, std::size_t treatments);

// sigma_{s,t}(x) = (f(x, T_{t+1}) - f(x, T_{s+1})) / (t - s) for click levels
// s != t, both at most n - 1. Symmetric in (s, t).
double leverage_rate(const OutcomeModel& model, std::span<const double> x, std::size_t s,
                     std::size_t t);

struct LvrRecord {
  std::size_t ad_id = 0;
  std::size_t s = 0;  // binned clicks of the most recent earlier day with s != t
  std::size_t t = 0;  // binned clicks of the last history day
  double sigma = 0.0;
};

// Nominal lvr from a click history (oldest day first). Clicks are binned at
// n - 1 before comparison. Throws InputError("missing history ...") when the
// history is shorter than two days or no earlier day differs from the last.
LvrRecord nominal_lvr(const OutcomeModel& model, std::span<const double> x, std::size_t ad_id,
                      std::span<const std::size_t> daily_clicks);

struct BidParams {
  double gamma = 1.0;  // inverse expected ROI
  double cvr = 0.05;
  double ip = 20.0;
  double kappa = 1.0;
  double sigma_bar = 1.0;  // mean sigma of the experiment group
  // Bids never drop below floor_fraction * gamma * cvr * ip.
  double floor_fraction = 0.01;

  void validate() const;
  double value() const { return gamma * cvr * ip; }
};

// gamma * cvr * ip.
double baseline_bid(const BidParams& params);
// kappa * (sigma / sigma_bar) * gamma * cvr * ip, floored at the minimum bid.
double bid(const BidParams& params, double sigma);

}  // namespace iae
