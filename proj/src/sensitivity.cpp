#include "hawkes/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "hawkes/psis.hpp"

namespace hawkes {
namespace {

struct WeightedPoint {
  double value;
  double weight;
  bool first;
};

std::vector<double> normalized(std::span<const double> w, std::size_t n) {
  if (w.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (w.size() != n) throw std::invalid_argument("cjs_distance: weight count mismatch");
  double total = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("cjs_distance: invalid weight");
    total += v;
  }
  if (!(total > 0.0)) throw std::invalid_argument("cjs_distance: weights sum to zero");
  std::vector<double> out(w.begin(), w.end());
  for (auto& v : out) v /= total;
  return out;
}

double cjs_term(double p, double q) {
  const double inv_2ln2 = 0.5 / std::log(2.0);
  double v = (q - p) * inv_2ln2;
  if (p > 0.0) v += p * std::log2(2.0 * p / (p + q));
  return v;
}

}  // namespace

std::string_view to_string(Component c) noexcept {
  return c == Component::prior ? "prior" : "likelihood";
}

std::string_view to_string(Diagnosis d) noexcept {
  switch (d) {
    case Diagnosis::robust:
      return "robust";
    case Diagnosis::prior_data_conflict:
      return "prior-data conflict";
    case Diagnosis::strong_prior_weak_likelihood:
      return "strong prior / weak likelihood";
  }
  return "robust";
}

ImportanceWeights power_scale_weights(std::span<const double> log_component, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("power scale: delta must be positive");
  if (log_component.empty()) throw std::invalid_argument("power scale: no draws");
  std::vector<double> lr(log_component.size());
  for (std::size_t i = 0; i < lr.size(); ++i) lr[i] = (delta - 1.0) * log_component[i];
  const PsisWeights p = psis(lr);
  ImportanceWeights out;
  out.k_hat = p.k_hat;
  out.reliable = !(p.k_hat > 0.7);
  out.weights.resize(lr.size());
  for (std::size_t i = 0; i < lr.size(); ++i) out.weights[i] = std::exp(p.log_weights[i]);
  return out;
}

ImportanceWeights power_scale_weights(const PosteriorDraws& draws, Component component, double delta) {
  const auto& terms = component == Component::prior ? draws.log_prior : draws.log_likelihood;
  if (terms.size() != draws.total()) throw std::invalid_argument("power scale: draws lack stored terms");
  return power_scale_weights(terms, delta);
}

double cjs_distance(std::span<const double> x, std::span<const double> x_weights, std::span<const double> y,
                    std::span<const double> y_weights) {
  if (x.empty() || y.empty()) throw std::invalid_argument("cjs_distance: empty sample");
  const std::vector<double> wx = normalized(x_weights, x.size());
  const std::vector<double> wy = normalized(y_weights, y.size());
  std::vector<WeightedPoint> pts;
  pts.reserve(x.size() + y.size());
  for (std::size_t i = 0; i < x.size(); ++i) pts.push_back({x[i], wx[i], true});
  for (std::size_t i = 0; i < y.size(); ++i) pts.push_back({y[i], wy[i], false});
  for (const auto& p : pts) {
    if (!std::isfinite(p.value)) throw std::invalid_argument("cjs_distance: non-finite draw");
  }
  std::sort(pts.begin(), pts.end(), [](const WeightedPoint& a, const WeightedPoint& b) { return a.value < b.value; });
  const double range = pts.back().value - pts.front().value;
  if (!(range > 0.0)) return 0.0;

  double p = 0.0;
  double q = 0.0;
  double pq = 0.0;
  double qp = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    (pts[i].first ? p : q) += pts[i].weight;
    const double dz = pts[i + 1].value - pts[i].value;
    if (dz == 0.0) continue;
    const double pc = std::min(p, 1.0);
    const double qc = std::min(q, 1.0);
    pq += dz * cjs_term(pc, qc);
    qp += dz * cjs_term(qc, pc);
  }
  return std::sqrt(std::max(0.0, 0.5 * (pq + qp) / range));
}

double cjs_distance(std::span<const double> draws, std::span<const double> weights) {
  if (draws.size() < 100) throw std::invalid_argument("cjs_distance: need at least 100 draws");
  if (!weights.empty() &&
      std::all_of(weights.begin(), weights.end(), [&](double v) { return v == weights[0]; })) {
    return 0.0;
  }
  return cjs_distance(draws, weights, draws, {});
}

Diagnosis diagnose(double prior_distance, double likelihood_distance, double tau) {
  if (prior_distance >= tau && likelihood_distance >= tau) return Diagnosis::prior_data_conflict;
  if (prior_distance >= tau) return Diagnosis::strong_prior_weak_likelihood;
  return Diagnosis::robust;
}

bool PowerScaleResult::reliable() const {
  return std::all_of(weights.begin(), weights.end(), [](const WeightCheck& w) { return w.reliable; });
}

PowerScaleResult power_scale_sensitivity(const ModelSpec& spec, const PosteriorDraws& draws,
                                         const SensitivityOptions& options) {
  if (draws.dim() != spec.dimension()) throw std::invalid_argument("draws do not match the model");
  if (options.deltas.empty()) throw std::invalid_argument("sensitivity: empty delta grid");
  PowerScaleResult out;
  out.model = draws.model;
  out.tau = options.tau;
  out.deltas = options.deltas;

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (std::size_t k : spec.prior_scaled_indices()) {
    names.push_back(spec.param_names()[k]);
    columns.push_back(draws.column(k));
  }
  if (spec.process() == ProcessKind::hawkes && spec.kind() == ModelKind::unpooled) {
    names.emplace_back("branching_factor");
    columns.push_back(population_branching_factor(spec, draws));
  }

  const std::size_t n_delta = options.deltas.size();
  std::vector<ImportanceWeights> w(2 * n_delta);
  for (std::size_t c = 0; c < 2; ++c) {
    const Component comp = c == 0 ? Component::prior : Component::likelihood;
    for (std::size_t d = 0; d < n_delta; ++d) {
      w[c * n_delta + d] = power_scale_weights(draws, comp, options.deltas[d]);
      out.weights.push_back({comp, options.deltas[d], w[c * n_delta + d].k_hat, w[c * n_delta + d].reliable});
    }
  }

  out.params.resize(names.size());
  const auto n_params = static_cast<std::ptrdiff_t>(names.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t kk = 0; kk < n_params; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    ParamSensitivity& p = out.params[k];
    p.name = names[k];
    for (std::size_t d = 0; d < n_delta; ++d) {
      p.prior = std::max(p.prior, cjs_distance(columns[k], w[d].weights));
      p.likelihood = std::max(p.likelihood, cjs_distance(columns[k], w[n_delta + d].weights));
    }
    p.diagnosis = diagnose(p.prior, p.likelihood, options.tau);
  }
  return out;
}

double weighted_quantile(std::span<const double> x, std::span<const double> weights, double prob) {
  if (x.empty() || x.size() != weights.size()) throw std::invalid_argument("weighted_quantile: size mismatch");
  if (!(prob >= 0.0 && prob <= 1.0)) throw std::invalid_argument("weighted_quantile: prob outside [0, 1]");
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cum = 0.0;
  for (std::size_t i : order) {
    cum += weights[i] / total;
    if (cum >= prob) return x[i];
  }
  return x[order.back()];
}

std::vector<SweepRow> branching_prior_sweep(const ModelSpec& spec, const PosteriorDraws& draws,
                                            std::span<const double> deltas) {
  const std::vector<double> bf = population_branching_factor(spec, draws);
  if (draws.log_prior_branching.size() != draws.total()) {
    throw std::invalid_argument("branching sweep: draws lack the branching prior term");
  }
  std::vector<SweepRow> rows;
  for (double delta : deltas) {
    const ImportanceWeights w = power_scale_weights(draws.log_prior_branching, delta);
    SweepRow r;
    r.delta = delta;
    r.k_hat = w.k_hat;
    r.reliable = w.reliable;
    for (std::size_t i = 0; i < bf.size(); ++i) r.mean += w.weights[i] * bf[i];
    double var = 0.0;
    for (std::size_t i = 0; i < bf.size(); ++i) var += w.weights[i] * (bf[i] - r.mean) * (bf[i] - r.mean);
    r.sd = std::sqrt(var);
    r.q05 = weighted_quantile(bf, w.weights, 0.05);
    r.q95 = weighted_quantile(bf, w.weights, 0.95);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace hawkes
