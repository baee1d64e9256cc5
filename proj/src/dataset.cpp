#include "iae/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

// ---- FeatureSchema --------------------------------------------------------

std::size_t FeatureSchema::dim() const {
  std::size_t d = 0;
  for (const FeatureGroup& g : groups) d += g.dim;
  return d;
}

std::size_t FeatureSchema::offset(const std::string& group) const {
  std::size_t off = 0;
  for (const FeatureGroup& g : groups) {
    if (g.name == group) return off;
    off += g.dim;
  }
  throw InputError("feature schema has no group '" + group + "'");
}

std::vector<bool> FeatureSchema::one_hot_mask() const {
  std::vector<bool> mask;
  for (const FeatureGroup& g : groups)
    for (std::size_t k = 0; k < g.dim; ++k) mask.push_back(g.kind == FeatureKind::kOneHot);
  return mask;
}

FeatureSchema FeatureSchema::default_schema() {
  return FeatureSchema{{
      {"ids", 10, FeatureKind::kOneHot, {}},
      {"pv_lastday", 6, FeatureKind::kContinuous, {}},
      {"pv_lastweek", 6, FeatureKind::kContinuous, {}},
      {"shop", 5, FeatureKind::kContinuous, {}},
      {"competition", 3, FeatureKind::kContinuous, {1, 2}},
  }};
}

FeatureSchema FeatureSchema::plain(std::size_t dim) {
  return FeatureSchema{{{"features", dim, FeatureKind::kContinuous, {}}}};
}

nlohmann::json FeatureSchema::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const FeatureGroup& g : groups) {
    out.push_back({{"name", g.name},
                   {"dim", g.dim},
                   {"kind", g.kind == FeatureKind::kOneHot ? "one_hot" : "continuous"},
                   {"log_columns", g.log_columns}});
  }
  return out;
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& j) {
  FeatureSchema s;
  for (const auto& e : j) {
    FeatureGroup g;
    g.name = e.at("name").get<std::string>();
    g.dim = e.at("dim").get<std::size_t>();
    const std::string kind = e.value("kind", "continuous");
    if (kind == "one_hot") {
      g.kind = FeatureKind::kOneHot;
    } else if (kind == "continuous") {
      g.kind = FeatureKind::kContinuous;
    } else {
      throw InputError("feature group '" + g.name + "' has unknown kind '" + kind + "'");
    }
    g.log_columns = e.value("log_columns", std::vector<std::size_t>{});
    for (std::size_t c : g.log_columns) {
      if (c >= g.dim) throw InputError("feature group '" + g.name + "' log column out of range");
    }
    s.groups.push_back(std::move(g));
  }
  return s;
}

// ---- Dataset --------------------------------------------------------------

Dataset::Dataset(std::size_t treatments, std::size_t context_dim, std::vector<Sample> samples,
                 FeatureSchema schema)
    : treatments_(treatments),
      context_dim_(context_dim),
      samples_(std::move(samples)),
      schema_(std::move(schema)) {
  if (treatments_ < 2) throw InputError("dataset needs at least 2 treatments");
  if (samples_.empty()) throw InputError("empty dataset");
  if (schema_.empty()) schema_ = FeatureSchema::plain(context_dim_);
  if (schema_.dim() != context_dim_) {
    throw InputError("feature schema covers " + std::to_string(schema_.dim()) +
                     " columns, context dim is " + std::to_string(context_dim_));
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const Sample& s = samples_[i];
    const std::string where = "sample " + std::to_string(i + 1);
    if (s.x.size() != context_dim_) {
      throw InputError(where + ": context has " + std::to_string(s.x.size()) + " values, expected " +
                       std::to_string(context_dim_));
    }
    if (s.t < 1 || static_cast<std::size_t>(s.t) > treatments_) {
      throw InputError(where + ": treatment " + std::to_string(s.t) + " outside 1.." +
                       std::to_string(treatments_));
    }
    if (!std::isfinite(s.y)) throw InputError(where + ": outcome is not finite");
    for (double v : s.x) {
      if (!std::isfinite(v)) throw InputError(where + ": context has a non-finite entry");
    }
  }
  recount();
}

void Dataset::recount() {
  counts_.assign(treatments_, 0);
  for (const Sample& s : samples_) ++counts_[static_cast<std::size_t>(s.t - 1)];
}

std::size_t Dataset::count(int treatment) const {
  if (treatment < 1 || static_cast<std::size_t>(treatment) > treatments_) {
    throw InputError("treatment index " + std::to_string(treatment) + " out of range");
  }
  return counts_[static_cast<std::size_t>(treatment - 1)];
}

double Dataset::mu(int treatment) const {
  return static_cast<double>(count(treatment)) / static_cast<double>(samples_.size());
}

Tensor Dataset::contexts() const {
  std::vector<std::size_t> all(samples_.size());
  std::iota(all.begin(), all.end(), 0);
  return contexts(all);
}

Tensor Dataset::contexts(std::span<const std::size_t> rows) const {
  Tensor out = Tensor::matrix(rows.size(), context_dim_);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::vector<double>& x = samples_.at(rows[r]).x;
    std::copy(x.begin(), x.end(), out.row_span(r).begin());
  }
  return out;
}

// ---- file IO --------------------------------------------------------------

std::filesystem::path sidecar_path(const std::filesystem::path& csv) {
  std::filesystem::path p = csv;
  p.replace_extension(".json");
  return p;
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string expected_header(std::size_t d) {
  std::string h = "t,y";
  for (std::size_t k = 0; k < d; ++k) h += ",x_" + std::to_string(k);
  return h;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& csv, DataFormat format) {
  if (format != DataFormat::kCsv) throw InputError("unsupported dataset format");
  if (!std::filesystem::exists(csv)) throw InputError("dataset not found: " + csv.string());
  const std::filesystem::path side = sidecar_path(csv);
  if (!std::filesystem::exists(side)) {
    throw InputError("dataset sidecar not found: " + side.string());
  }
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_file(side));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(side.string() + ": " + e.what());
  }
  if (meta.value("format", "") != "iae-dataset") {
    throw InputError(side.string() + " is not an iae-dataset sidecar");
  }
  const auto n = meta.at("treatments").get<std::size_t>();
  const auto d = meta.at("context_dim").get<std::size_t>();
  FeatureSchema schema = meta.contains("feature_schema")
                             ? FeatureSchema::from_json(meta.at("feature_schema"))
                             : FeatureSchema{};

  const std::string text = io::read_file(csv);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw InputError("empty dataset: " + csv.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header(d)) {
    throw InputError(csv.string() + ": header does not match 't,y,x_0..x_" +
                     std::to_string(d - 1) + "'");
  }
  std::vector<Sample> samples;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const std::string where = csv.filename().string() + " row " + std::to_string(row);
    const auto fields = split_commas(line);
    if (fields.size() != d + 2) {
      throw InputError(where + ": expected " + std::to_string(d + 2) + " fields, got " +
                       std::to_string(fields.size()));
    }
    Sample s;
    const long long t = io::parse_int(fields[0], where + " column t");
    if (t < 1 || t > static_cast<long long>(n)) {
      throw InputError(where + ": treatment " + std::to_string(t) + " outside 1.." +
                       std::to_string(n));
    }
    s.t = static_cast<int>(t);
    s.y = io::parse_double(fields[1], where + " column y");
    s.x.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      s.x[k] = io::parse_double(fields[k + 2], where + " column x_" + std::to_string(k));
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw InputError("empty dataset: " + csv.string());
  Dataset data(n, d, std::move(samples), std::move(schema));
  if (meta.contains("ground_truth")) data.set_ground_truth(meta.at("ground_truth"));
  return data;
}

void save_dataset(const Dataset& data, const std::filesystem::path& csv) {
  std::string out = expected_header(data.context_dim()) + "\n";
  for (const Sample& s : data.samples()) {
    out += std::to_string(s.t);
    out += ',';
    out += io::format_double(s.y);
    for (double v : s.x) {
      out += ',';
      out += io::format_double(v);
    }
    out += '\n';
  }
  io::write_file(csv, out);

  nlohmann::json meta = {{"format", "iae-dataset"},
                         {"version", 1},
                         {"treatments", data.treatments()},
                         {"context_dim", data.context_dim()},
                         {"rows", data.size()},
                         {"feature_schema", data.schema().to_json()}};
  if (!data.ground_truth().is_null()) meta["ground_truth"] = data.ground_truth();
  io::write_file(sidecar_path(csv), meta.dump(2) + "\n");
}

InputScaler fit_scaler(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("fit_scaler: no rows");
  const std::size_t d = data.context_dim();
  const std::vector<bool> one_hot = data.schema().one_hot_mask();
  InputScaler s;
  s.mean.assign(d, 0.0);
  s.scale.assign(d, 1.0);
  const auto count = static_cast<double>(rows.size());
  for (std::size_t k = 0; k < d; ++k) {
    if (one_hot[k]) continue;
    double sum = 0.0;
    for (std::size_t r : rows) sum += data[r].x[k];
    const double mean = sum / count;
    double ss = 0.0;
    for (std::size_t r : rows) {
      const double dv = data[r].x[k] - mean;
      ss += dv * dv;
    }
    const double sd = std::sqrt(ss / count);
    s.mean[k] = mean;
    s.scale[k] = sd > 1e-12 ? sd : 1.0;
  }
  return s;
}

// ---- sampling -------------------------------------------------------------

MinibatchSampler::MinibatchSampler(std::size_t population, std::size_t batch_size,
                                   std::uint64_t seed)
    : population_(population), batch_size_(batch_size), rng_(seed) {
  if (population == 0) throw InputError("minibatch: empty population");
  if (batch_size == 0) throw InputError("minibatch: batch size must be >= 1");
  if (batch_size > population) {
    std::cerr << "warning: batch size " << batch_size << " exceeds " << population
              << " samples; clamping\n";
    batch_size_ = population;
    clamped_ = true;
  }
}

std::vector<std::vector<std::size_t>> MinibatchSampler::next_epoch() {
  std::vector<std::size_t> perm(population_);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng_);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < population_; start += batch_size_) {
    const std::size_t stop = std::min(population_, start + batch_size_);
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t population, double validation_fraction, std::uint64_t seed) {
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw InputError("validation fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> perm(population);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto n_val = static_cast<std::size_t>(
      std::llround(validation_fraction * static_cast<double>(population)));
  std::vector<std::size_t> val(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(n_val), perm.end());
  std::sort(val.begin(), val.end());
  std::sort(train.begin(), train.end());
  return {std::move(train), std::move(val)};
}

}  // namespace iae
