#include "iae/trainer.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "iae/error.hpp"
#include "iae/io.hpp"

namespace iae {

void TrainConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InputError("train: lambda must be >= 0");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InputError("train: beta must be >= 0");
  if (batch_size < 2) throw InputError("train: batch size must be >= 2");
  if (!(tolerance >= 0.0)) throw InputError("train: tolerance must be >= 0");
  if (patience < 1) throw InputError("train: patience must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InputError("train: validation fraction must lie in [0, 1)");
  }
  if (!(adam.learning_rate > 0.0)) throw InputError("train: learning rate must be > 0");
  ipm.validate();
}

nlohmann::json TrainConfig::to_json() const {
  return {{"lambda", lambda},
          {"beta", beta},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"tolerance", tolerance},
          {"patience", patience},
          {"validation_fraction", validation_fraction},
          {"adam",
           {{"learning_rate", adam.learning_rate},
            {"beta1", adam.beta1},
            {"beta2", adam.beta2},
            {"epsilon", adam.epsilon}}},
          {"ipm",
           {{"method", ipm_method_name(ipm.method)},
            {"epsilon", ipm.epsilon},
            {"relative_epsilon", ipm.relative_epsilon},
            {"iterations", ipm.iterations},
            {"relaxation", ipm.relaxation},
            {"symmetric", ipm.symmetric}}},
          {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.lambda = j.at("lambda").get<double>();
  c.beta = j.at("beta").get<double>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.epochs = j.at("epochs").get<std::size_t>();
  c.tolerance = j.at("tolerance").get<double>();
  c.patience = j.at("patience").get<std::size_t>();
  c.validation_fraction = j.at("validation_fraction").get<double>();
  const auto& a = j.at("adam");
  c.adam.learning_rate = a.at("learning_rate").get<double>();
  c.adam.beta1 = a.at("beta1").get<double>();
  c.adam.beta2 = a.at("beta2").get<double>();
  c.adam.epsilon = a.at("epsilon").get<double>();
  const auto& p = j.at("ipm");
  c.ipm.method = parse_ipm_method(p.at("method").get<std::string>());
  c.ipm.epsilon = p.at("epsilon").get<double>();
  c.ipm.relative_epsilon = p.at("relative_epsilon").get<bool>();
  c.ipm.iterations = p.at("iterations").get<std::size_t>();
  c.ipm.relaxation = p.at("relaxation").get<double>();
  c.ipm.symmetric = p.at("symmetric").get<bool>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.validate();
  return c;
}

std::vector<double> treatment_weights(const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("treatment weights: no rows");
  std::vector<std::size_t> counts(data.treatments(), 0);
  for (std::size_t r : rows) ++counts[static_cast<std::size_t>(data[r].t - 1)];
  std::vector<double> mu(counts.size());
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) {
      throw InputError("treatment T_" + std::to_string(j + 1) +
                       " has no training samples; positivity is violated");
    }
    mu[j] = static_cast<double>(counts[j]) / static_cast<double>(rows.size());
  }
  return mu;
}

namespace {

bool is_endpoint(int t, std::size_t n) { return t == 1 || static_cast<std::size_t>(t) == n; }

}  // namespace

std::vector<double> factual_coefficients(const Dataset& data, std::span<const std::size_t> batch,
                                         std::span<const double> mu) {
  const auto m = static_cast<double>(batch.size());
  std::vector<double> c(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const int t = data[batch[b]].t;
    const double endpoint = is_endpoint(t, data.treatments()) ? 1.0 : 0.0;
    c[b] = mu[static_cast<std::size_t>(t - 1)] * (2.0 - endpoint) / m;
  }
  return c;
}

ObjectiveGraph build_objective(Tape& tape, const Model& model, const BoundParams& params,
                               const Dataset& data, std::span<const std::size_t> batch,
                               std::span<const double> mu, const TrainConfig& config) {
  if (batch.empty()) throw InputError("objective: empty batch");
  if (mu.size() != data.treatments()) throw InputError("objective: mu has the wrong length");
  const std::size_t m = batch.size();
  const std::size_t n = data.treatments();

  Tensor channel = Tensor::matrix(m, 1);
  Tensor targets = Tensor::matrix(m, 1);
  Tensor weighted = Tensor::matrix(m, 1);
  Tensor endpoint = Tensor::matrix(m, 1);
  for (std::size_t b = 0; b < m; ++b) {
    const Sample& s = data[batch[b]];
    const double mu_t = mu[static_cast<std::size_t>(s.t - 1)];
    channel[b] = model.treatment_channel(s.t);
    targets[b] = s.y;
    weighted[b] = 2.0 * mu_t / static_cast<double>(m);
    endpoint[b] = is_endpoint(s.t, n) ? mu_t / static_cast<double>(m) : 0.0;
  }

  ObjectiveGraph g;
  Var x = tape.constant(model.scaler().apply(data.contexts(batch)));
  Var rep = model.represent(tape, params, x);
  Var pred = model.hypothesis(tape, params, rep, tape.constant(std::move(channel)));
  g.losses = tape.square(tape.sub(pred, tape.constant(std::move(targets))));
  g.weighted_factual = tape.sum(tape.mul(g.losses, tape.constant(std::move(weighted))));
  g.endpoint_correction = tape.sum(tape.mul(g.losses, tape.constant(std::move(endpoint))));

  g.l2 = tape.constant(Tensor::scalar(0.0));
  for (Var w : params.hyp_weight) g.l2 = tape.add(g.l2, tape.sum(tape.square(w)));

  g.ipm_sum = tape.constant(Tensor::scalar(0.0));
  if (config.beta > 0.0) {
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t b = 0; b < m; ++b) {
      groups[static_cast<std::size_t>(data[batch[b]].t - 1)].push_back(b);
    }
    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (groups[i].size() < 2 || groups[i + 1].size() < 2) continue;
      Var p = tape.gather_rows(rep, groups[i]);
      Var q = tape.gather_rows(rep, groups[i + 1]);
      g.ipm_sum = tape.add(g.ipm_sum, sinkhorn_distance(tape, p, q, config.ipm));
      ++g.ipm_pairs;
    }
  }

  Var total = tape.sub(g.weighted_factual, g.endpoint_correction);
  total = tape.add(total, tape.scale(g.l2, config.lambda));
  if (config.beta > 0.0) total = tape.add(total, tape.scale(g.ipm_sum, config.beta));
  g.total = total;
  return g;
}

ObjectiveValues objective_values(const Tape& tape, const ObjectiveGraph& graph) {
  return ObjectiveValues{tape.value(graph.weighted_factual).item(),
                         tape.value(graph.endpoint_correction).item(),
                         tape.value(graph.l2).item(), tape.value(graph.ipm_sum).item(),
                         tape.value(graph.total).item()};
}

ObjectiveValues objective(const Model& model, const Dataset& data,
                          std::span<const std::size_t> batch, std::span<const double> mu,
                          const TrainConfig& config) {
  Tape tape;
  const BoundParams params = model.bind(tape);
  return objective_values(tape, build_objective(tape, model, params, data, batch, mu, config));
}

double factual_mse(const Model& model, const Dataset& data, std::span<const std::size_t> rows) {
  if (rows.empty()) throw InputError("factual_mse: no rows");
  std::vector<int> t(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) t[r] = data[rows[r]].t;
  const std::vector<double> pred = model.predict_batch(data.contexts(rows), t);
  double s = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double e = pred[r] - data[rows[r]].y;
    s += e * e;
  }
  return s / static_cast<double>(rows.size());
}

nlohmann::json TrainReport::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const EpochRecord& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"weighted_factual", e.weighted_factual},
                    {"endpoint_correction", e.endpoint_correction},
                    {"factual", e.factual()},
                    {"l2_penalty", e.l2_penalty},
                    {"ipm_sum", e.ipm_sum},
                    {"objective", e.objective},
                    {"val_factual", e.val_factual}});
  }
  return {{"epochs", rows},
          {"epochs_run", epochs.size()},
          {"initial_val_factual", initial_val_factual},
          {"best_epoch", best_epoch},
          {"best_val_factual", best_val_factual},
          {"stopped_early", stopped_early},
          {"checkpoint", checkpoint}};
}

std::string TrainReport::to_csv() const {
  std::string out = "epoch,factual,ipm_sum,objective,val_factual\n";
  for (const EpochRecord& e : epochs) {
    out += std::to_string(e.epoch) + "," + io::format_double(e.factual()) + "," +
           io::format_double(e.ipm_sum) + "," + io::format_double(e.objective) + "," +
           io::format_double(e.val_factual) + "\n";
  }
  return out;
}

namespace {

// Tape handles in the order of Model::parameter_tensors().
std::vector<Var> ordered(const BoundParams& p) {
  std::vector<Var> out;
  for (std::size_t l = 0; l < p.rep_weight.size(); ++l) {
    out.push_back(p.rep_weight[l]);
    out.push_back(p.rep_bias[l]);
  }
  for (std::size_t l = 0; l < p.hyp_weight.size(); ++l) {
    out.push_back(p.hyp_weight[l]);
    out.push_back(p.hyp_bias[l]);
  }
  return out;
}

std::string divergence_message(const Tape& tape, const ObjectiveGraph& g,
                               std::span<const std::size_t> batch, std::size_t epoch,
                               std::size_t batch_index, std::size_t last_good) {
  std::ostringstream msg;
  msg << "objective diverged at epoch " << epoch << ", batch " << batch_index;
  const Tensor& losses = tape.value(g.losses);
  bool located = false;
  for (std::size_t b = 0; b < losses.size(); ++b) {
    if (!std::isfinite(losses[b])) {
      msg << " (term 'factual', sample index " << batch[b] << ")";
      located = true;
      break;
    }
  }
  if (!located) {
    if (!std::isfinite(tape.value(g.ipm_sum).item())) {
      msg << " (term 'ipm')";
    } else if (!std::isfinite(tape.value(g.l2).item())) {
      msg << " (term 'l2')";
    }
  }
  msg << "; last good epoch " << last_good;
  return msg.str();
}

}  // namespace

TrainResult train(const Dataset& data, const ModelConfig& model_config,
                  const TrainConfig& config) {
  config.validate();
  model_config.validate();
  if (model_config.context_dim != data.context_dim() ||
      model_config.treatments != data.treatments()) {
    throw InputError("model config (d=" + std::to_string(model_config.context_dim) +
                     ", n=" + std::to_string(model_config.treatments) +
                     ") does not match the dataset (d=" + std::to_string(data.context_dim()) +
                     ", n=" + std::to_string(data.treatments()) + ")");
  }
  for (std::size_t j = 1; j <= data.treatments(); ++j) {
    if (data.count(static_cast<int>(j)) == 0) {
      throw InputError("treatment T_" + std::to_string(j) +
                       " has no samples; positivity is violated, refusing to train");
    }
  }

  auto [train_rows, val_rows] = split_indices(data.size(), config.validation_fraction, config.seed);
  if (train_rows.size() < 2) throw InputError("train: fewer than 2 training samples");
  const std::vector<double> mu = treatment_weights(data, train_rows);
  const std::vector<std::size_t>& monitor = val_rows.empty() ? train_rows : val_rows;

  Model model = Model::initialize(model_config);
  model.scaler() = fit_scaler(data, train_rows);

  TrainResult result{model, {}};
  TrainReport& report = result.report;
  report.initial_val_factual = factual_mse(model, data, monitor);
  report.best_val_factual = report.initial_val_factual;
  if (!std::isfinite(report.best_val_factual)) {
    throw NumericError("validation loss of the initial model is not finite");
  }

  std::vector<Tensor> params;
  for (Tensor* t : model.parameter_tensors()) params.push_back(*t);
  AdamState adam(config.adam, params);
  MinibatchSampler sampler(train_rows.size(), config.batch_size, config.seed ^ 0x5DEECE66DULL);

  std::size_t since_best = 0;
  double reference = report.initial_val_factual;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    const auto batches = sampler.next_epoch();
    for (std::size_t bi = 0; bi < batches.size(); ++bi) {
      std::vector<std::size_t> batch(batches[bi].size());
      for (std::size_t k = 0; k < batch.size(); ++k) batch[k] = train_rows[batches[bi][k]];

      Tape tape;
      const BoundParams bound = model.bind(tape);
      const ObjectiveGraph g = build_objective(tape, model, bound, data, batch, mu, config);
      const ObjectiveValues v = objective_values(tape, g);
      if (!std::isfinite(v.total)) {
        throw NumericError(divergence_message(tape, g, batch, epoch, bi, epoch - 1));
      }
      tape.backward(g.total);
      std::vector<Tensor> grads;
      for (Var p : ordered(bound)) grads.push_back(tape.grad(p));
      try {
        adam.apply(params, grads);
      } catch (const NumericError& e) {
        throw NumericError(std::string(e.what()) + " at epoch " + std::to_string(epoch) +
                           "; last good epoch " + std::to_string(epoch - 1));
      }
      std::vector<Tensor*> dst = model.parameter_tensors();
      for (std::size_t k = 0; k < dst.size(); ++k) *dst[k] = params[k];

      rec.weighted_factual += v.weighted_factual;
      rec.endpoint_correction += v.endpoint_correction;
      rec.l2_penalty += config.lambda * v.l2;
      rec.ipm_sum += v.ipm_sum;
      rec.objective += v.total;
    }
    const auto count = static_cast<double>(batches.size());
    rec.weighted_factual /= count;
    rec.endpoint_correction /= count;
    rec.l2_penalty /= count;
    rec.ipm_sum /= count;
    rec.objective /= count;
    rec.val_factual = factual_mse(model, data, monitor);
    if (!std::isfinite(rec.val_factual)) {
      throw NumericError("validation loss diverged at epoch " + std::to_string(epoch) +
                         "; last good epoch " + std::to_string(epoch - 1));
    }
    report.epochs.push_back(rec);

    // The returned parameters track the strict minimum; patience only resets
    // on an improvement larger than the tolerance.
    if (rec.val_factual < report.best_val_factual) {
      report.best_val_factual = rec.val_factual;
      report.best_epoch = epoch;
      result.model = model;
    }
    if (rec.val_factual < reference * (1.0 - config.tolerance)) {
      reference = rec.val_factual;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      report.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace iae
