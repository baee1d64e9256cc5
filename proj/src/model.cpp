#include "iae/model.hpp"

#include <cmath>
#include <random>

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

Activation parse_activation(const std::string& name) {
  if (name == "elu") return Activation::kElu;
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw InputError("unknown activation '" + name + "' (expected elu, relu or tanh)");
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kElu: return "elu";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "elu";
}

void ModelConfig::validate() const {
  if (context_dim < 1) throw InputError("model: context dim must be >= 1");
  if (treatments < 2) throw InputError("model: need at least 2 treatments, got " +
                                       std::to_string(treatments));
  if (rep_width < 1 || rep_depth < 1 || hyp_width < 1 || hyp_depth < 1) {
    throw InputError("model: widths and depths must be >= 1");
  }
}

nlohmann::json ModelConfig::to_json() const {
  return {{"context_dim", context_dim}, {"treatments", treatments},
          {"rep_width", rep_width},     {"rep_depth", rep_depth},
          {"hyp_width", hyp_width},     {"hyp_depth", hyp_depth},
          {"activation", activation_name(activation)},
          {"seed", seed}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.context_dim = j.at("context_dim").get<std::size_t>();
  c.treatments = j.at("treatments").get<std::size_t>();
  c.rep_width = j.at("rep_width").get<std::size_t>();
  c.rep_depth = j.at("rep_depth").get<std::size_t>();
  c.hyp_width = j.at("hyp_width").get<std::size_t>();
  c.hyp_depth = j.at("hyp_depth").get<std::size_t>();
  c.activation = parse_activation(j.at("activation").get<std::string>());
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

// ---- InputScaler ----------------------------------------------------------

void InputScaler::apply(std::span<const double> x, std::span<double> out) const {
  if (empty()) {
    std::copy(x.begin(), x.end(), out.begin());
    return;
  }
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - mean[k]) / scale[k];
}

Tensor InputScaler::apply(const Tensor& rows) const {
  Tensor out = rows;
  if (empty()) return out;
  if (rows.cols() != mean.size()) {
    throw InputError("scaler fitted for dim " + std::to_string(mean.size()) + ", got " +
                     std::to_string(rows.cols()));
  }
  for (std::size_t r = 0; r < rows.rows(); ++r) apply(rows.row_span(r), out.row_span(r));
  return out;
}

nlohmann::json InputScaler::to_json() const { return {{"mean", mean}, {"scale", scale}}; }

InputScaler InputScaler::from_json(const nlohmann::json& j) {
  InputScaler s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.scale = j.at("scale").get<std::vector<double>>();
  if (s.mean.size() != s.scale.size()) throw InputError("scaler: mean/scale length mismatch");
  return s;
}

// ---- Model ----------------------------------------------------------------

namespace {

Linear glorot_layer(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Linear layer{Tensor::matrix(fan_in, fan_out), Tensor::matrix(1, fan_out)};
  for (double& w : layer.weight.values()) w = dist(rng);
  return layer;
}

}  // namespace

Model Model::initialize(const ModelConfig& config) {
  config.validate();
  Model m(config);
  std::mt19937_64 rng(config.seed);
  std::size_t in = config.context_dim;
  for (std::size_t l = 0; l < config.rep_depth; ++l) {
    m.rep_.push_back(glorot_layer(in, config.rep_width, rng));
    in = config.rep_width;
  }
  in = config.rep_width + 1;
  for (std::size_t l = 0; l < config.hyp_depth; ++l) {
    const std::size_t out = l + 1 == config.hyp_depth ? 1 : config.hyp_width;
    m.hyp_.push_back(glorot_layer(in, out, rng));
    in = out;
  }
  return m;
}

double Model::treatment_channel(int treatment) const {
  check_treatment(treatment);
  return static_cast<double>(treatment - 1) / static_cast<double>(config_.treatments - 1);
}

Var Model::activate(Tape& tape, Var v) const {
  switch (config_.activation) {
    case Activation::kElu: return tape.elu(v);
    case Activation::kRelu: return tape.relu(v);
    case Activation::kTanh: return tape.tanh(v);
  }
  return v;
}

BoundParams Model::bind(Tape& tape) const {
  BoundParams p;
  for (const Linear& l : rep_) {
    p.rep_weight.push_back(tape.variable(l.weight));
    p.rep_bias.push_back(tape.variable(l.bias));
  }
  for (const Linear& l : hyp_) {
    p.hyp_weight.push_back(tape.variable(l.weight));
    p.hyp_bias.push_back(tape.variable(l.bias));
  }
  return p;
}

Var Model::represent(Tape& tape, const BoundParams& p, Var scaled_contexts) const {
  Var h = scaled_contexts;
  for (std::size_t l = 0; l < rep_.size(); ++l) {
    h = tape.add_row(tape.matmul(h, p.rep_weight[l]), p.rep_bias[l]);
    if (l + 1 < rep_.size()) h = activate(tape, h);
  }
  return h;
}

Var Model::hypothesis(Tape& tape, const BoundParams& p, Var representation,
                      Var treatment_channel) const {
  Var h = tape.concat_cols(representation, treatment_channel);
  for (std::size_t l = 0; l < hyp_.size(); ++l) {
    h = tape.add_row(tape.matmul(h, p.hyp_weight[l]), p.hyp_bias[l]);
    if (l + 1 < hyp_.size()) h = activate(tape, h);
  }
  return h;
}

namespace {

// Inference runs on a gradient-free tape so it shares every arithmetic step
// with the training path.
BoundParams bind_constants(Tape& tape, const std::vector<Linear>& rep,
                           const std::vector<Linear>& hyp) {
  BoundParams p;
  for (const Linear& l : rep) {
    p.rep_weight.push_back(tape.constant(l.weight));
    p.rep_bias.push_back(tape.constant(l.bias));
  }
  for (const Linear& l : hyp) {
    p.hyp_weight.push_back(tape.constant(l.weight));
    p.hyp_bias.push_back(tape.constant(l.bias));
  }
  return p;
}

}  // namespace

Tensor Model::represent_batch(const Tensor& contexts) const {
  if (contexts.cols() != config_.context_dim) {
    throw InputError("contexts have dim " + std::to_string(contexts.cols()) +
                     ", model expects " + std::to_string(config_.context_dim));
  }
  Tape tape;
  const BoundParams p = bind_constants(tape, rep_, {});
  return tape.value(represent(tape, p, tape.constant(scaler_.apply(contexts))));
}

std::vector<double> Model::predict_batch(const Tensor& contexts,
                                         std::span<const int> treatments) const {
  if (contexts.cols() != config_.context_dim) {
    throw InputError("contexts have dim " + std::to_string(contexts.cols()) +
                     ", model expects " + std::to_string(config_.context_dim));
  }
  if (treatments.size() != contexts.rows()) {
    throw InputError("predict_batch: " + std::to_string(contexts.rows()) + " contexts but " +
                     std::to_string(treatments.size()) + " treatments");
  }
  Tensor channel = Tensor::matrix(contexts.rows(), 1);
  for (std::size_t r = 0; r < treatments.size(); ++r) channel[r] = treatment_channel(treatments[r]);
  Tape tape;
  const BoundParams p = bind_constants(tape, rep_, hyp_);
  Var rep = represent(tape, p, tape.constant(scaler_.apply(contexts)));
  Var out = hypothesis(tape, p, rep, tape.constant(std::move(channel)));
  const Tensor& v = tape.value(out);
  return std::vector<double>(v.values().begin(), v.values().end());
}

std::vector<double> Model::represent(std::span<const double> x) const {
  check_context(x);
  const Tensor r = represent_batch(Tensor::row(x));
  return std::vector<double>(r.values().begin(), r.values().end());
}

double Model::predict(std::span<const double> x, int treatment) const {
  check_context(x);
  check_treatment(treatment);
  const int t[] = {treatment};
  return predict_batch(Tensor::row(x), t)[0];
}

std::vector<double> Model::predict_all(std::span<const double> x) const {
  check_context(x);
  const std::size_t n = config_.treatments;
  Tensor rows = Tensor::matrix(n, x.size());
  std::vector<int> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(x.begin(), x.end(), rows.row_span(i).begin());
    t[i] = static_cast<int>(i) + 1;
  }
  return predict_batch(rows, t);
}

std::vector<Tensor*> Model::parameter_tensors() {
  std::vector<Tensor*> out;
  for (Linear& l : rep_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  for (Linear& l : hyp_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

TensorMap Model::parameters() const {
  TensorMap m;
  for (std::size_t l = 0; l < rep_.size(); ++l) {
    m["phi." + std::to_string(l) + ".weight"] = rep_[l].weight;
    m["phi." + std::to_string(l) + ".bias"] = rep_[l].bias;
  }
  for (std::size_t l = 0; l < hyp_.size(); ++l) {
    m["h." + std::to_string(l) + ".weight"] = hyp_[l].weight;
    m["h." + std::to_string(l) + ".bias"] = hyp_[l].bias;
  }
  return m;
}

void Model::set_parameters(const TensorMap& tensors) {
  auto take = [&](const std::string& name, Tensor& dst) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw InputError("checkpoint is missing tensor '" + name + "'");
    if (!it->second.same_shape(dst)) {
      throw InputError("checkpoint tensor '" + name + "' has shape " +
                       it->second.shape_string() + ", model expects " + dst.shape_string());
    }
    if (!it->second.all_finite()) throw InputError("checkpoint tensor '" + name + "' not finite");
    dst = it->second;
  };
  for (std::size_t l = 0; l < rep_.size(); ++l) {
    take("phi." + std::to_string(l) + ".weight", rep_[l].weight);
    take("phi." + std::to_string(l) + ".bias", rep_[l].bias);
  }
  for (std::size_t l = 0; l < hyp_.size(); ++l) {
    take("h." + std::to_string(l) + ".weight", hyp_[l].weight);
    take("h." + std::to_string(l) + ".bias", hyp_[l].bias);
  }
  if (tensors.size() != 2 * (rep_.size() + hyp_.size())) {
    throw InputError("checkpoint has unexpected extra tensors");
  }
}

bool Model::operator==(const Model& other) const {
  return config_.to_json() == other.config_.to_json() && parameters() == other.parameters() &&
         scaler_.mean == other.scaler_.mean && scaler_.scale == other.scaler_.scale;
}

void Model::save(const std::filesystem::path& dir) const {
  nlohmann::json meta = {{"format", "iae-model"},
                         {"version", kCheckpointVersion},
                         {"kind", "network"},
                         {"config", config_.to_json()},
                         {"input_scaler", scaler_.to_json()},
                         {"checkpoint", "checkpoint.json"}};
  io::write_file(dir / "model.json", meta.dump(2) + "\n");
  save_tensors(dir / "checkpoint.json", parameters());
}

Model Model::load(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(io::read_file(dir / "model.json"));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError((dir / "model.json").string() + ": " + e.what());
  }
  if (meta.value("format", "") != "iae-model" || meta.value("kind", "") != "network") {
    throw InputError((dir / "model.json").string() + " is not a network model sidecar");
  }
  Model m = initialize(ModelConfig::from_json(meta.at("config")));
  m.scaler_ = InputScaler::from_json(meta.at("input_scaler"));
  m.set_parameters(load_tensors(dir / meta.value("checkpoint", "checkpoint.json")));
  return m;
}

}  // namespace iae
