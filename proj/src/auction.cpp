#include "iae/auction.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <limits>
#include <optional>
#include <sstream>
#include <tuple>

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

namespace {

constexpr const char* kLogHeader = "ad_id,day,opportunity_id,competing_price,click_prob";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double keyed_uniform(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// ---- AuctionLog -----------------------------------------------------------

AuctionLog::AuctionLog(std::vector<Opportunity> opportunities) : ops_(std::move(opportunities)) {
  if (ops_.empty()) throw InputError("auction log is empty");
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    const Opportunity& o = ops_[i];
    if (!(o.competing_price > 0.0) || !std::isfinite(o.competing_price)) {
      throw InputError("auction log entry " + std::to_string(i + 1) +
                       ": competing price must be > 0");
    }
    if (!(o.click_prob >= 0.0 && o.click_prob <= 1.0)) {
      throw InputError("auction log entry " + std::to_string(i + 1) +
                       ": click probability must lie in [0, 1]");
    }
  }
  std::sort(ops_.begin(), ops_.end(), [](const Opportunity& a, const Opportunity& b) {
    return std::tie(a.ad_id, a.day, a.opportunity_id) < std::tie(b.ad_id, b.day, b.opportunity_id);
  });
  for (std::size_t i = 1; i < ops_.size(); ++i) {
    const Opportunity& a = ops_[i - 1];
    const Opportunity& b = ops_[i];
    if (a.ad_id == b.ad_id && a.day == b.day && a.opportunity_id == b.opportunity_id) {
      throw InputError("auction log has duplicate opportunity (ad " + std::to_string(a.ad_id) +
                       ", day " + std::to_string(a.day) + ", id " +
                       std::to_string(a.opportunity_id) + ")");
    }
  }
  for (const Opportunity& o : ops_) {
    ads_ = std::max(ads_, o.ad_id + 1);
    days_ = std::max(days_, o.day + 1);
  }
  offsets_.assign(ads_ * days_ + 1, 0);
  for (const Opportunity& o : ops_) ++offsets_[o.ad_id * days_ + o.day + 1];
  for (std::size_t k = 1; k < offsets_.size(); ++k) offsets_[k] += offsets_[k - 1];
}

std::span<const Opportunity> AuctionLog::slot(std::size_t ad, std::size_t day) const {
  if (ad >= ads_ || day >= days_) return {};
  const std::size_t k = ad * days_ + day;
  return std::span<const Opportunity>(ops_).subspan(offsets_[k], offsets_[k + 1] - offsets_[k]);
}

std::string AuctionLog::to_csv() const {
  std::string out = std::string(kLogHeader) + "\n";
  for (const Opportunity& o : ops_) {
    out += std::to_string(o.ad_id) + "," + std::to_string(o.day) + "," +
           std::to_string(o.opportunity_id) + "," + io::format_double(o.competing_price) + "," +
           io::format_double(o.click_prob) + "\n";
  }
  return out;
}

AuctionLog AuctionLog::from_csv(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError(source + ": empty auction log");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader) {
    throw InputError(source + ": auction log header must be '" + std::string(kLogHeader) + "'");
  }
  std::vector<Opportunity> ops;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::string where = source + " row " + std::to_string(row);
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 5) throw InputError(where + ": expected 5 fields");
    auto index = [&](const std::string& v, const char* name) {
      const long long x = io::parse_int(v, where + " column " + name);
      if (x < 0) throw InputError(where + ": " + name + " must be >= 0");
      return static_cast<std::size_t>(x);
    };
    Opportunity o;
    o.ad_id = index(f[0], "ad_id");
    o.day = index(f[1], "day");
    o.opportunity_id = index(f[2], "opportunity_id");
    o.competing_price = io::parse_double(f[3], where + " column competing_price");
    o.click_prob = io::parse_double(f[4], where + " column click_prob");
    ops.push_back(o);
  }
  return AuctionLog(std::move(ops));
}

void AuctionLog::save(const std::filesystem::path& path) const { io::write_file(path, to_csv()); }

AuctionLog AuctionLog::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("auction log not found: " + path.string());
  return from_csv(io::read_file(path), path.filename().string());
}

// ---- generation -----------------------------------------------------------

void LogConfig::validate() const {
  if (ads < 1 || days < 1 || opportunities_per_day < 1) {
    throw InputError("auction log: ads, days and opportunities per day must be >= 1");
  }
  if (!(price_sigma >= 0.0)) throw InputError("auction log: price sigma must be >= 0");
  if (!(click_prob_min >= 0.0 && click_prob_min <= click_prob_max && click_prob_max <= 1.0)) {
    throw InputError("auction log: click probability range must lie in [0, 1]");
  }
}

nlohmann::json LogConfig::to_json() const {
  return {{"ads", ads},
          {"days", days},
          {"opportunities_per_day", opportunities_per_day},
          {"price_sigma", price_sigma},
          {"click_prob_min", click_prob_min},
          {"click_prob_max", click_prob_max},
          {"seed", seed}};
}

LogConfig LogConfig::from_json(const nlohmann::json& j) {
  LogConfig c;
  c.ads = j.at("ads").get<std::size_t>();
  c.days = j.at("days").get<std::size_t>();
  c.opportunities_per_day = j.at("opportunities_per_day").get<std::size_t>();
  c.price_sigma = j.at("price_sigma").get<double>();
  c.click_prob_min = j.at("click_prob_min").get<double>();
  c.click_prob_max = j.at("click_prob_max").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

AuctionLog generate_log(const LogConfig& config, std::span<const double> reference_prices) {
  config.validate();
  if (reference_prices.size() != config.ads) {
    throw InputError("auction log: need one reference price per AD");
  }
  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> prob(config.click_prob_min, config.click_prob_max);
  std::vector<Opportunity> ops;
  ops.reserve(config.ads * config.days * config.opportunities_per_day);
  for (std::size_t a = 0; a < config.ads; ++a) {
    if (!(reference_prices[a] > 0.0)) throw InputError("auction log: reference price must be > 0");
    for (std::size_t d = 0; d < config.days; ++d) {
      for (std::size_t k = 0; k < config.opportunities_per_day; ++k) {
        Opportunity o{a, d, k, 0.0, 0.0};
        o.competing_price = reference_prices[a] * std::exp(config.price_sigma * normal(rng));
        o.click_prob = prob(rng);
        ops.push_back(o);
      }
    }
  }
  return AuctionLog(std::move(ops));
}

// ---- replay ---------------------------------------------------------------

ReplayTotals& ReplayTotals::operator+=(const ReplayTotals& o) {
  ad_clicks += o.ad_clicks;
  cost += o.cost;
  all_clicks += o.all_clicks;
  organic_clicks += o.organic_clicks;
  return *this;
}

nlohmann::json ReplayTotals::to_json() const {
  return {{"ad_clicks", ad_clicks},
          {"cost", cost},
          {"all_clicks", all_clicks},
          {"organic_clicks", organic_clicks}};
}

ReplayResult replay(const AuctionLog& log, std::span<const double> bids,
                    std::span<const std::size_t> ads, std::size_t first_day,
                    std::size_t last_day, std::uint64_t seed, const ResponseFn& response) {
  if (bids.size() < log.ads()) {
    throw InputError("replay: need a bid for each of the " + std::to_string(log.ads()) + " ADs");
  }
  if (first_day > last_day) throw InputError("replay: empty or reversed day range");
  for (std::size_t a : ads) {
    if (a >= log.ads()) throw InputError("replay: AD " + std::to_string(a) + " not in the log");
  }
  const std::size_t span_days = last_day - first_day;
  ReplayResult result;
  result.rows.resize(ads.size() * span_days);
  const auto count = static_cast<std::ptrdiff_t>(ads.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const std::size_t a = ads[static_cast<std::size_t>(k)];
    for (std::size_t d = first_day; d < last_day; ++d) {
      AdDayOutcome& out = result.rows[static_cast<std::size_t>(k) * span_days + (d - first_day)];
      out.ad_id = a;
      out.day = d;
      for (const Opportunity& o : log.slot(a, d)) {
        if (!(bids[a] > o.competing_price)) continue;
        if (keyed_uniform(seed, a, d, o.opportunity_id) < o.click_prob) {
          ++out.ad_clicks;
          out.totals.cost += o.competing_price;
        }
      }
      out.totals.ad_clicks = static_cast<double>(out.ad_clicks);
      out.totals.all_clicks = response ? response(a, d, out.ad_clicks) : out.totals.ad_clicks;
      out.totals.organic_clicks = out.totals.all_clicks - out.totals.ad_clicks;
    }
  }
  for (const AdDayOutcome& r : result.rows) result.totals += r.totals;
  return result;
}

// ---- calibration ----------------------------------------------------------

nlohmann::json CalibrationResult::to_json() const {
  nlohmann::json t = nlohmann::json::array();
  for (const auto& [k, c] : trace) t.push_back({k, c});
  return {{"kappa", kappa},   {"cost", cost},
          {"target", target}, {"gap", gap},
          {"steps", steps},   {"within_tolerance", within_tolerance},
          {"warning", warning}, {"trace", t}};
}

CalibrationResult calibrate_kappa(const std::function<double(double)>& cost_at,
                                  double baseline_cost, const CalibrationOptions& options) {
  if (!(baseline_cost > 0.0)) throw InputError("calibrate: baseline cost must be > 0");
  if (!(options.kappa_min > 0.0 && options.kappa_min < options.kappa_max)) {
    throw InputError("calibrate: need 0 < kappa_min < kappa_max");
  }
  if (!(options.tolerance >= 0.0)) throw InputError("calibrate: tolerance must be >= 0");

  CalibrationResult r;
  r.target = baseline_cost;
  double best_abs = std::numeric_limits<double>::infinity();
  auto evaluate = [&](double kappa) {
    const double c = cost_at(kappa);
    r.trace.emplace_back(kappa, c);
    const double gap = (c - baseline_cost) / baseline_cost;
    if (std::abs(gap) < best_abs) {
      best_abs = std::abs(gap);
      r.kappa = kappa;
      r.cost = c;
      r.gap = gap;
    }
    return gap;
  };
  auto done = [&] {
    r.within_tolerance = true;
    return r;
  };

  std::optional<double> gap_one;
  if (options.kappa_min <= 1.0 && 1.0 <= options.kappa_max) {
    gap_one = evaluate(1.0);
    if (std::abs(*gap_one) <= options.tolerance) return done();
  }
  double lo = options.kappa_min;
  double hi = options.kappa_max;
  const double gap_lo = evaluate(lo);
  if (std::abs(gap_lo) <= options.tolerance) return done();
  const double gap_hi = evaluate(hi);
  if (std::abs(gap_hi) <= options.tolerance) return done();
  if (gap_lo > 0.0 || gap_hi < 0.0) {
    std::ostringstream msg;
    msg << "kappa bracket [" << lo << ", " << hi << "] does not reach the baseline cost "
        << baseline_cost << ": cost(" << lo << ") = " << r.trace[r.trace.size() - 2].second
        << ", cost(" << hi << ") = " << r.trace.back().second;
    throw CalibrationError(msg.str());
  }
  if (gap_one) (*gap_one < 0.0 ? lo : hi) = 1.0;
  while (r.steps < options.max_steps) {
    const double mid = std::sqrt(lo * hi);
    ++r.steps;
    const double gap = evaluate(mid);
    if (std::abs(gap) <= options.tolerance) return done();
    (gap < 0.0 ? lo : hi) = mid;
  }
  r.warning = "cost curve steps across the tolerance band; using the closest kappa (gap " +
              std::to_string(r.gap) + ")";
  return r;
}

}  // namespace iae
