#include "iae/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "iae/error.hpp"
#include "iae/io.hpp"
#include "iae/model.hpp"

namespace iae {

namespace {

constexpr std::size_t kPilotSamples = 4000;

// Independent, reproducible generator streams derived from one seed.
enum Stream : std::uint64_t {
  kStreamWeights = 1,
  kStreamPilot = 2,
  kStreamContexts = 3,
  kStreamAssignment = 4,
  kStreamNoise = 5,
  kStreamEvaluation = 6,
};

std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

std::pair<double, double> center_and_scale(const Tensor& contexts, std::span<const double> w) {
  std::vector<double> scores(contexts.rows());
  for (std::size_t r = 0; r < contexts.rows(); ++r) scores[r] = dot(contexts.row_span(r), w);
  const double mean =
      std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / static_cast<double>(scores.size()));
  return {mean, sd > 1e-12 ? sd : 1.0};
}

}  // namespace

// ---- GenConfig ------------------------------------------------------------

void GenConfig::validate() const {
  if (treatments < 2) {
    throw InputError("generate: need at least 2 treatments, got " + std::to_string(treatments));
  }
  if (schema.empty() || schema.dim() == 0) throw InputError("generate: empty feature schema");
  if (samples < 10 * treatments) {
    throw InputError("generate: need at least 10 samples per treatment (" +
                     std::to_string(10 * treatments) + "), got " + std::to_string(samples));
  }
  if (!(bias >= 0.0) || !std::isfinite(bias)) throw InputError("generate: bias must be >= 0");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw InputError("generate: noise must be >= 0");
  if (!(lift_min >= 0.0) || !(lift_max >= lift_min) || !std::isfinite(lift_max)) {
    throw InputError("generate: lift range must satisfy 0 <= lift_min <= lift_max");
  }
}

nlohmann::json GenConfig::to_json() const {
  return {{"samples", samples},   {"treatments", treatments}, {"feature_schema", schema.to_json()},
          {"bias", bias},         {"noise", noise},           {"lift_min", lift_min},
          {"lift_max", lift_max}, {"seed", seed}};
}

GenConfig GenConfig::from_json(const nlohmann::json& j) {
  GenConfig c;
  c.samples = j.at("samples").get<std::size_t>();
  c.treatments = j.at("treatments").get<std::size_t>();
  c.schema = FeatureSchema::from_json(j.at("feature_schema"));
  c.bias = j.at("bias").get<double>();
  c.noise = j.at("noise").get<double>();
  c.lift_min = j.at("lift_min").get<double>();
  c.lift_max = j.at("lift_max").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

// ---- ContextSampler -------------------------------------------------------

ContextSampler::ContextSampler(FeatureSchema schema, std::uint64_t seed)
    : schema_(std::move(schema)), rng_(seed) {}

std::vector<double> ContextSampler::next() {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<int> rank(1, 100);
  const double activity = normal(rng_);
  std::vector<double> x;
  x.reserve(schema_.dim());
  std::vector<double> lastday;
  for (const FeatureGroup& g : schema_.groups) {
    if (g.kind == FeatureKind::kOneHot) {
      std::uniform_int_distribution<std::size_t> pick(0, g.dim - 1);
      const std::size_t hot = pick(rng_);
      for (std::size_t k = 0; k < g.dim; ++k) x.push_back(k == hot ? 1.0 : 0.0);
      continue;
    }
    const bool page_views = g.name.rfind("pv_", 0) == 0;
    const bool decayed = g.name == "pv_lastweek" && lastday.size() == g.dim;
    std::vector<double> values(g.dim);
    for (std::size_t k = 0; k < g.dim; ++k) {
      const bool log_col =
          std::find(g.log_columns.begin(), g.log_columns.end(), k) != g.log_columns.end();
      if (log_col) {
        values[k] = std::log1p(static_cast<double>(rank(rng_)));
      } else if (page_views) {
        values[k] = std::exp(0.5 * activity + 0.5 * normal(rng_));
        if (decayed) values[k] = 0.5 * lastday[k] + 0.5 * values[k];
      } else {
        values[k] = 0.5 * activity + std::sqrt(0.75) * normal(rng_);
      }
    }
    if (g.name == "pv_lastday") lastday = values;
    x.insert(x.end(), values.begin(), values.end());
  }
  return x;
}

Tensor ContextSampler::draw(std::size_t count) {
  Tensor out = Tensor::matrix(count, schema_.dim());
  for (std::size_t r = 0; r < count; ++r) {
    const std::vector<double> x = next();
    std::copy(x.begin(), x.end(), out.row_span(r).begin());
  }
  return out;
}

// ---- GroundTruth ----------------------------------------------------------

GroundTruth GroundTruth::draw(const GenConfig& config) {
  config.validate();
  GroundTruth gt;
  gt.treatments_ = config.treatments;
  gt.noise_ = config.noise;
  gt.lift_min_ = config.lift_min;
  gt.lift_max_ = config.lift_max;
  const std::size_t d = config.context_dim();
  std::mt19937_64 rng = stream_rng(config.seed, kStreamWeights);
  std::normal_distribution<double> normal(0.0, 1.0);
  gt.base_weights_.resize(d);
  gt.lift_weights_.resize(d);
  for (double& w : gt.base_weights_) w = normal(rng);
  for (double& w : gt.lift_weights_) w = normal(rng);

  ContextSampler pilot(config.schema, stream_rng(config.seed, kStreamPilot)());
  const Tensor contexts = pilot.draw(kPilotSamples);
  std::tie(gt.base_center_, gt.base_scale_) = center_and_scale(contexts, gt.base_weights_);
  std::tie(gt.lift_center_, gt.lift_scale_) = center_and_scale(contexts, gt.lift_weights_);
  return gt;
}

void GroundTruth::check(std::span<const double> x) const {
  if (x.size() != context_dim()) {
    throw InputError("ground truth expects context dim " + std::to_string(context_dim()) +
                     ", got " + std::to_string(x.size()));
  }
}

double GroundTruth::base_score(std::span<const double> x) const {
  return (dot(x, base_weights_) - base_center_) / base_scale_;
}

double GroundTruth::lift_score(std::span<const double> x) const {
  return (dot(x, lift_weights_) - lift_center_) / lift_scale_;
}

double GroundTruth::base(std::span<const double> x) const {
  check(x);
  return base_level_ + base_amplitude_ * std::tanh(base_score(x));
}

double GroundTruth::lift(std::span<const double> x) const {
  check(x);
  return lift_min_ + (lift_max_ - lift_min_) / (1.0 + std::exp(-lift_score(x)));
}

double GroundTruth::saturation(std::size_t clicks) const {
  if (clicks >= treatments_) {
    throw InputError("saturation: " + std::to_string(clicks) + " clicks exceeds n - 1 = " +
                     std::to_string(treatments_ - 1));
  }
  const double r = 1.0 - static_cast<double>(clicks) / static_cast<double>(treatments_ - 1);
  return 1.0 - r * r;
}

double GroundTruth::mean_outcome(std::span<const double> x, int treatment) const {
  if (treatment < 1 || static_cast<std::size_t>(treatment) > treatments_) {
    throw InputError("treatment index " + std::to_string(treatment) + " outside 1.." +
                     std::to_string(treatments_));
  }
  return base(x) + lift(x) * saturation(static_cast<std::size_t>(treatment - 1));
}

double GroundTruth::true_iae(std::span<const double> x, int i, int j) const {
  return mean_outcome(x, j) - mean_outcome(x, i);
}

double GroundTruth::selection_score(std::span<const double> x) const {
  check(x);
  return std::tanh(0.5 * lift_score(x));
}

std::vector<double> GroundTruth::assignment_probabilities(std::span<const double> x,
                                                          double bias) const {
  const double s = selection_score(x);
  std::vector<double> logits(treatments_);
  for (std::size_t i = 0; i < treatments_; ++i) {
    logits[i] = bias * s * static_cast<double>(i) / static_cast<double>(treatments_ - 1);
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) z += (l = std::exp(l - top));
  for (double& l : logits) l /= z;
  return logits;
}

nlohmann::json GroundTruth::to_json() const {
  return {{"kind", "saturating-lift"},
          {"treatments", treatments_},
          {"noise", noise_},
          {"base_level", base_level_},
          {"base_amplitude", base_amplitude_},
          {"lift_min", lift_min_},
          {"lift_max", lift_max_},
          {"base_weights", base_weights_},
          {"lift_weights", lift_weights_},
          {"base_center", base_center_},
          {"base_scale", base_scale_},
          {"lift_center", lift_center_},
          {"lift_scale", lift_scale_}};
}

GroundTruth GroundTruth::from_json(const nlohmann::json& j) {
  if (j.value("kind", "") != "saturating-lift") {
    throw InputError("unsupported ground truth kind '" + j.value("kind", "") + "'");
  }
  GroundTruth gt;
  gt.treatments_ = j.at("treatments").get<std::size_t>();
  gt.noise_ = j.at("noise").get<double>();
  gt.base_level_ = j.at("base_level").get<double>();
  gt.base_amplitude_ = j.at("base_amplitude").get<double>();
  gt.lift_min_ = j.at("lift_min").get<double>();
  gt.lift_max_ = j.at("lift_max").get<double>();
  gt.base_weights_ = j.at("base_weights").get<std::vector<double>>();
  gt.lift_weights_ = j.at("lift_weights").get<std::vector<double>>();
  gt.base_center_ = j.at("base_center").get<double>();
  gt.base_scale_ = j.at("base_scale").get<double>();
  gt.lift_center_ = j.at("lift_center").get<double>();
  gt.lift_scale_ = j.at("lift_scale").get<double>();
  if (gt.treatments_ < 2 || gt.base_weights_.size() != gt.lift_weights_.size() ||
      !(gt.base_scale_ > 0.0) || !(gt.lift_scale_ > 0.0)) {
    throw InputError("ground truth parameters are inconsistent");
  }
  return gt;
}

// ---- generation -----------------------------------------------------------

Generated generate(const GenConfig& config) {
  config.validate();
  GroundTruth truth = GroundTruth::draw(config);
  ContextSampler sampler(config.schema, stream_rng(config.seed, kStreamContexts)());
  std::mt19937_64 assign_rng = stream_rng(config.seed, kStreamAssignment);
  std::mt19937_64 noise_rng = stream_rng(config.seed, kStreamNoise);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Sample> samples(config.samples);
  for (Sample& s : samples) {
    s.x = sampler.next();
    // Inverse-CDF draw keeps one uniform per sample regardless of n.
    const std::vector<double> probs = truth.assignment_probabilities(s.x, config.bias);
    const double u = unit(assign_rng);
    double acc = 0.0;
    s.t = static_cast<int>(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) {
        s.t = static_cast<int>(i) + 1;
        break;
      }
    }
    const double eps = normal(noise_rng);
    s.y = std::max(0.0, truth.mean_outcome(s.x, s.t) + config.noise * eps);
  }
  Dataset data(config.treatments, config.context_dim(), std::move(samples), config.schema);
  nlohmann::json gt = truth.to_json();
  gt["generator"] = config.to_json();
  data.set_ground_truth(std::move(gt));
  return Generated{std::move(data), std::move(truth)};
}

Tensor evaluation_contexts(const GenConfig& config, std::size_t count) {
  ContextSampler sampler(config.schema, stream_rng(config.seed, kStreamEvaluation)());
  return sampler.draw(count);
}

GroundTruth ground_truth_of(const Dataset& data) {
  if (data.ground_truth().is_null()) throw InputError("PEHE requires ground truth");
  return GroundTruth::from_json(data.ground_truth());
}

// ---- oracle ---------------------------------------------------------------

double OracleModel::predict(std::span<const double> x, int treatment) const {
  check_context(x);
  check_treatment(treatment);
  return truth_.mean_outcome(x, treatment);
}

void OracleModel::save(const std::filesystem::path& dir) const {
  const nlohmann::json meta = {{"format", "iae-model"},
                               {"version", kCheckpointVersion},
                               {"kind", "oracle"},
                               {"ground_truth", truth_.to_json()}};
  io::write_file(dir / "model.json", meta.dump(2) + "\n");
}

std::unique_ptr<OutcomeModel> load_outcome_model(const std::filesystem::path& dir) {
  const std::filesystem::path meta_path = dir / "model.json";
  if (!std::filesystem::exists(meta_path)) {
    throw InputError("model not found: " + meta_path.string());
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_file(meta_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(meta_path.string() + ": " + e.what());
  }
  const std::string kind = meta.value("kind", "");
  if (kind == "oracle") {
    return std::make_unique<OracleModel>(GroundTruth::from_json(meta.at("ground_truth")));
  }
  if (kind == "network") return std::make_unique<Model>(Model::load(dir));
  throw InputError(meta_path.string() + ": unknown model kind '" + kind + "'");
}

}  // namespace iae
