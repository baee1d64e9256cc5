#include "iae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "iae/error.hpp"
#include "iae/io.hpp"
#include "iae/model.hpp"

namespace iae {

Tensor outcome_grid(const OutcomeModel& model, const Tensor& contexts) {
  const std::size_t n = model.treatments();
  const std::size_t rows = contexts.rows();
  if (contexts.cols() != model.context_dim()) {
    throw InputError("contexts have dim " + std::to_string(contexts.cols()) +
                     ", model expects " + std::to_string(model.context_dim()));
  }
  Tensor grid = Tensor::matrix(rows, n);
  if (const auto* net = dynamic_cast<const Model*>(&model)) {
    Tensor stacked = Tensor::matrix(rows * n, contexts.cols());
    std::vector<int> t(rows * n);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto src = contexts.row_span(r);
        std::copy(src.begin(), src.end(), stacked.row_span(r * n + i).begin());
        t[r * n + i] = static_cast<int>(i) + 1;
      }
    }
    const std::vector<double> pred = net->predict_batch(stacked, t);
    std::copy(pred.begin(), pred.end(), grid.values().begin());
    return grid;
  }
  const auto total = static_cast<std::ptrdiff_t>(rows);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < total; ++r) {
    const auto ur = static_cast<std::size_t>(r);
    const std::vector<double> f = model.predict_all(contexts.row_span(ur));
    std::copy(f.begin(), f.end(), grid.row_span(ur).begin());
  }
  return grid;
}

namespace {

Tensor truth_grid(const GroundTruth& truth, const Tensor& contexts) {
  return outcome_grid(OracleModel(truth), contexts);
}

void check_compatible(const OutcomeModel& model, const GroundTruth& truth) {
  if (model.treatments() != truth.treatments() || model.context_dim() != truth.context_dim()) {
    throw InputError("model (d=" + std::to_string(model.context_dim()) +
                     ", n=" + std::to_string(model.treatments()) +
                     ") does not match the ground truth (d=" +
                     std::to_string(truth.context_dim()) + ", n=" +
                     std::to_string(truth.treatments()) + ")");
  }
}

// tau_ij on row r of the two grids.
double grid_tau(const Tensor& f, const Tensor& m, std::size_t r, std::size_t i, std::size_t j) {
  return (f(r, j) - f(r, i)) - (m(r, j) - m(r, i));
}

}  // namespace

double tau(const OutcomeModel& model, const GroundTruth& truth, std::span<const double> x, int i,
           int j) {
  check_compatible(model, truth);
  return (model.predict(x, j) - model.predict(x, i)) - truth.true_iae(x, i, j);
}

std::vector<double> tau_square_sums(const OutcomeModel& model, const GroundTruth& truth,
                                    const Tensor& contexts) {
  check_compatible(model, truth);
  const Tensor f = outcome_grid(model, contexts);
  const Tensor m = truth_grid(truth, contexts);
  const std::size_t n = model.treatments();
  std::vector<double> out(contexts.rows(), 0.0);
  for (std::size_t r = 0; r < out.size(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double t = grid_tau(f, m, r, i, j);
        out[r] += t * t;
      }
    }
  }
  return out;
}

double pehe(const OutcomeModel& model, const GroundTruth& truth, const Tensor& contexts) {
  if (contexts.rows() == 0) throw InputError("pehe: no evaluation contexts");
  const std::vector<double> sums = tau_square_sums(model, truth, contexts);
  const double mean =
      std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(sums.size());
  const auto n = static_cast<double>(model.treatments());
  return mean / (n * (n - 1.0));
}

bool PeheReport::consistent() const {
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max({1.0, std::abs(a), std::abs(b)});
  };
  auto non_negative = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
  };
  if (!(pehe >= 0.0) || !(adjacent_sum >= 0.0) || !(surrogate >= 0.0) || !(ipm_sum >= 0.0)) {
    return false;
  }
  if (!non_negative(adjacent_tau_sq) || !non_negative(factual_loss) ||
      !non_negative(pair_factual) || !non_negative(ipm)) {
    return false;
  }
  if (!close(adjacent_sum, std::accumulate(adjacent_tau_sq.begin(), adjacent_tau_sq.end(), 0.0))) {
    return false;
  }
  if (!close(ipm_sum, std::accumulate(ipm.begin(), ipm.end(), 0.0))) return false;
  double s = 0.0;
  for (std::size_t k = 0; k < pair_factual.size(); ++k) {
    if (!close(pair_factual[k], factual_loss[k] + factual_loss[k + 1])) return false;
    s += pair_factual[k] + beta * (ipm_available ? ipm[k] : 0.0);
  }
  return close(surrogate, 2.0 * s);
}

nlohmann::json PeheReport::to_json() const {
  return {{"treatments", treatments},
          {"contexts", contexts},
          {"beta", beta},
          {"pehe", pehe},
          {"adjacent_tau_sq", adjacent_tau_sq},
          {"adjacent_sum", adjacent_sum},
          {"adjacent_bound_holds", adjacent_bound_holds},
          {"weighted_adjacent_bound", weighted_adjacent_bound},
          {"factual_loss", factual_loss},
          {"factual_count", factual_count},
          {"pair_factual", pair_factual},
          {"ipm_available", ipm_available},
          {"ipm", ipm},
          {"ipm_sum", ipm_sum},
          {"surrogate", surrogate},
          {"surrogate_exceeded", surrogate_exceeded},
          {"consistent", consistent()}};
}

PeheReport bound_check(const OutcomeModel& model, const GroundTruth& truth, const Tensor& contexts,
                       const Dataset& data, double beta, const BoundCheckOptions& options) {
  check_compatible(model, truth);
  if (contexts.rows() == 0) throw InputError("bound check: no evaluation contexts");
  if (data.treatments() != model.treatments() || data.context_dim() != model.context_dim()) {
    throw InputError("bound check: dataset does not match the model");
  }
  if (!(beta >= 0.0)) throw InputError("bound check: beta must be >= 0");
  const std::size_t n = model.treatments();
  PeheReport rep;
  rep.treatments = n;
  rep.contexts = contexts.rows();
  rep.beta = beta;

  const Tensor f = outcome_grid(model, contexts);
  const Tensor m = truth_grid(truth, contexts);
  const auto rows = static_cast<double>(contexts.rows());
  double ordered = 0.0;
  rep.adjacent_tau_sq.assign(n - 1, 0.0);
  for (std::size_t r = 0; r < contexts.rows(); ++r) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double t = grid_tau(f, m, r, i, j);
        ordered += t * t;
      }
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double t = grid_tau(f, m, r, k, k + 1);
      rep.adjacent_tau_sq[k] += t * t;
    }
  }
  const auto nd = static_cast<double>(n);
  rep.pehe = ordered / rows / (nd * (nd - 1.0));
  for (double& v : rep.adjacent_tau_sq) v /= rows;
  rep.adjacent_sum = std::accumulate(rep.adjacent_tau_sq.begin(), rep.adjacent_tau_sq.end(), 0.0);
  rep.adjacent_bound_holds =
      rep.pehe <= rep.adjacent_sum + 1e-12 * std::max(1.0, rep.adjacent_sum);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    double c = 0.0;
    for (std::size_t i = 0; i <= k; ++i)
      for (std::size_t j = k + 1; j < n; ++j) c += static_cast<double>(j - i);
    rep.weighted_adjacent_bound += c * rep.adjacent_tau_sq[k];
  }
  rep.weighted_adjacent_bound *= 2.0 / (nd * (nd - 1.0));

  // Factual losses with the single observed outcome per sample.
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), 0);
  const Tensor xs = data.contexts(all);
  const Tensor fx = outcome_grid(model, xs);
  rep.factual_loss.assign(n, 0.0);
  rep.factual_count.assign(n, 0);
  for (std::size_t r = 0; r < data.size(); ++r) {
    const auto t = static_cast<std::size_t>(data[r].t - 1);
    const double e = fx(r, t) - data[r].y;
    rep.factual_loss[t] += e * e;
    ++rep.factual_count[t];
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (rep.factual_count[t] > 0) rep.factual_loss[t] /= static_cast<double>(rep.factual_count[t]);
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    rep.pair_factual.push_back(rep.factual_loss[k] + rep.factual_loss[k + 1]);
  }

  if (const auto* net = dynamic_cast<const Model*>(&model)) {
    rep.ipm_available = true;
    std::vector<std::vector<std::size_t>> groups(n);
    for (std::size_t r = 0; r < data.size(); ++r) {
      groups[static_cast<std::size_t>(data[r].t - 1)].push_back(r);
    }
    std::mt19937_64 rng(options.seed);
    for (auto& g : groups) {
      if (g.size() > options.ipm_max_samples) {
        std::shuffle(g.begin(), g.end(), rng);
        g.resize(options.ipm_max_samples);
        std::sort(g.begin(), g.end());
      }
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
      if (groups[k].empty() || groups[k + 1].empty()) {
        rep.ipm.push_back(0.0);
        continue;
      }
      const SampleCloud p(net->represent_batch(data.contexts(groups[k])));
      const SampleCloud q(net->represent_batch(data.contexts(groups[k + 1])));
      rep.ipm.push_back(std::max(0.0, ipm_distance(p, q, options.ipm).distance));
    }
    rep.ipm_sum = std::accumulate(rep.ipm.begin(), rep.ipm.end(), 0.0);
  }

  double s = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    s += rep.pair_factual[k] + beta * (rep.ipm_available ? rep.ipm[k] : 0.0);
  }
  rep.surrogate = 2.0 * s;
  rep.surrogate_exceeded = rep.pehe > rep.surrogate;
  return rep;
}

void append_ledger_row(const std::filesystem::path& ledger, const std::string& run,
                       const PeheReport& report) {
  std::string row;
  if (!std::filesystem::exists(ledger)) {
    row = "run,treatments,contexts,beta,pehe,adjacent_sum,adjacent_bound_holds,"
          "weighted_adjacent_bound,surrogate\n";
  }
  row += run + "," + std::to_string(report.treatments) + "," + std::to_string(report.contexts) +
         "," + io::format_double(report.beta) + "," + io::format_double(report.pehe) + "," +
         io::format_double(report.adjacent_sum) + "," +
         (report.adjacent_bound_holds ? "1" : "0") + "," +
         io::format_double(report.weighted_adjacent_bound) + "," +
         io::format_double(report.surrogate) + "\n";
  io::append_file(ledger, row);
}

}  // namespace iae
