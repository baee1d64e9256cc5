#include "iae/lvr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "iae/error.hpp"

namespace iae {

int clicks_to_treatment(std::size_t clicks, std::size_t treatments) {
  if (treatments < 2) throw InputError("need at least 2 treatments");
  return static_cast<int>(std::min(clicks, treatments - 1)) + 1;
}

double leverage_rate(const OutcomeModel& model, std::span<const double> x, std::size_t s,
                     std::size_t t) {
  if (s == t) throw InputError("undefined leverage rate: s == t == " + std::to_string(s));
  const std::size_t top = model.treatments() - 1;
  if (s > top || t > top) {
    throw InputError("leverage rate: click levels " + std::to_string(s) + ", " +
                     std::to_string(t) + " exceed n - 1 = " + std::to_string(top));
  }
  const double ft = model.predict(x, static_cast<int>(t) + 1);
  const double fs = model.predict(x, static_cast<int>(s) + 1);
  const double sigma = (ft - fs) / (static_cast<double>(t) - static_cast<double>(s));
  if (!std::isfinite(sigma)) throw NumericError("leverage rate is not finite");
  return sigma;
}

LvrRecord nominal_lvr(const OutcomeModel& model, std::span<const double> x, std::size_t ad_id,
                      std::span<const std::size_t> daily_clicks) {
  const std::size_t n = model.treatments();
  if (daily_clicks.size() < 2) {
    throw InputError("missing history for AD " + std::to_string(ad_id) +
                     ": need at least two days of clicks");
  }
  auto level = [n](std::size_t c) { return static_cast<std::size_t>(clicks_to_treatment(c, n) - 1); };
  LvrRecord rec;
  rec.ad_id = ad_id;
  rec.t = level(daily_clicks.back());
  for (std::size_t k = daily_clicks.size() - 1; k-- > 0;) {
    const std::size_t s = level(daily_clicks[k]);
    if (s != rec.t) {
      rec.s = s;
      rec.sigma = leverage_rate(model, x, rec.s, rec.t);
      return rec;
    }
  }
  throw InputError("missing history for AD " + std::to_string(ad_id) +
                   ": no earlier day with clicks different from " + std::to_string(rec.t));
}

void BidParams::validate() const {
  if (!(gamma > 0.0)) throw InputError("bid: gamma must be > 0");
  if (!(cvr >= 0.0 && cvr <= 1.0)) throw InputError("bid: cvr must lie in [0, 1]");
  if (!(ip > 0.0)) throw InputError("bid: item price must be > 0");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw InputError("bid: kappa must be >= 0");
  if (!(sigma_bar > 0.0) || !std::isfinite(sigma_bar)) {
    throw InputError("bid: mean leverage rate must be > 0");
  }
  if (!(floor_fraction >= 0.0)) throw InputError("bid: floor fraction must be >= 0");
}

double baseline_bid(const BidParams& params) {
  params.validate();
  return params.value();
}

double bid(const BidParams& params, double sigma) {
  params.validate();
  if (!std::isfinite(sigma)) throw InputError("bid: leverage rate is not finite");
  const double floor = params.floor_fraction * params.value();
  const double price = params.kappa * (sigma / params.sigma_bar) * params.value();
  return std::max(price, floor);
}

}  // namespace iae
