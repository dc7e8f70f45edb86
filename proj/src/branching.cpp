#include "hawkes/branching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hawkes/rng.hpp"
#include "hawkes/stats.hpp"

namespace hawkes {

double TriggerProbMatrix::row_sum(std::size_t i) const {
  double s = p_exo.at(i) + p_edge.at(i);
  for (double v : p_parent.at(i)) s += v;
  return s;
}

TriggerProbMatrix trigger_probabilities(const HawkesParams& params, const Session& session) {
  validate(params);
  validate(session);
  if (session.empty()) throw std::invalid_argument("trigger_probabilities: session has no events");
  const std::size_t n = session.size();
  const double edge_scale = (params.mu0 - params.mu) * params.beta;
  const double kernel_scale = params.alpha * params.beta;
  TriggerProbMatrix out;
  out.p_exo.resize(n);
  out.p_edge.resize(n);
  out.p_parent.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ti = session.times[i];
    std::vector<double>& row = out.p_parent[i];
    row.resize(i);
    double total = params.mu;
    const double edge = edge_scale * std::exp(-params.beta * ti);
    total += edge;
    for (std::size_t j = 0; j < i; ++j) {
      row[j] = kernel_scale * std::exp(-params.beta * (ti - session.times[j]));
      total += row[j];
    }
    if (!(total > 0.0) || !std::isfinite(total)) {
      throw std::domain_error("trigger_probabilities: non-positive intensity at an event");
    }
    out.p_exo[i] = params.mu / total;
    out.p_edge[i] = edge / total;
    for (auto& v : row) v /= total;
  }
  return out;
}

BranchingForest sample_forest(const TriggerProbMatrix& probs, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed, stream);
  BranchingForest forest(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double u = rng.uniform() * probs.row_sum(i);
    double acc = probs.p_exo[i];
    if (u < acc) {
      forest[i] = {ParentLabel::Kind::exogenous, 0};
      continue;
    }
    acc += probs.p_edge[i];
    if (u < acc) {
      forest[i] = {ParentLabel::Kind::edge, 0};
      continue;
    }
    const auto& row = probs.p_parent[i];
    std::size_t pick = row.size();
    for (std::size_t j = 0; j < row.size(); ++j) {
      acc += row[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    if (pick == row.size()) {
      // Rounding left u beyond the last cell: take the last cell with mass.
      pick = 0;
      for (std::size_t j = row.size(); j-- > 0;) {
        if (row[j] > 0.0) {
          pick = j;
          break;
        }
      }
      if (row.empty() || row[pick] == 0.0) {
        forest[i] = {probs.p_edge[i] > 0.0 ? ParentLabel::Kind::edge : ParentLabel::Kind::exogenous, 0};
        continue;
      }
    }
    forest[i] = {ParentLabel::Kind::event, pick};
  }
  return forest;
}

double parent_recovery(const BranchingForest& sampled, const BranchingForest& truth) {
  if (sampled.size() != truth.size()) throw std::invalid_argument("parent_recovery: size mismatch");
  if (sampled.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < sampled.size(); ++i) hits += sampled[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(sampled.size());
}

double chance_recovery(const TriggerProbMatrix& probs) {
  if (probs.size() == 0) return 0.0;
  auto h = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    double entropy = h(probs.p_exo[i]) + h(probs.p_edge[i]);
    for (double v : probs.p_parent[i]) entropy += h(v);
    total += std::exp(-entropy);
  }
  return total / static_cast<double>(probs.size());
}

double expected_descendants(double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("expected_descendants: negative branching factor");
  if (a >= 1.0) return std::numeric_limits<double>::infinity();
  return a / (1.0 - a);
}

DescendantsSummary expected_descendants(std::span<const double> draws) {
  DescendantsSummary out;
  out.values.reserve(draws.size());
  std::vector<double> finite;
  for (double a : draws) {
    out.values.push_back(expected_descendants(a));
    if (std::isfinite(out.values.back())) {
      finite.push_back(out.values.back());
    } else {
      ++out.supercritical;
    }
  }
  if (!finite.empty()) out.mean = stats::mean(finite);
  if (finite.size() > 1) out.sd = stats::sd(finite);
  return out;
}

std::vector<double> uniform_grid(double duration, std::size_t points) {
  if (!(duration > 0.0)) throw std::invalid_argument("uniform_grid: duration must be positive");
  if (points < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  std::vector<double> g(points);
  for (std::size_t i = 0; i < points; ++i) {
    g[i] = duration * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  return g;
}

std::vector<double> exogenous_probability(const HawkesParams& p, const Session& session,
                                          std::span<const double> grid) {
  std::vector<double> out(grid.size());
  double decayed = 0.0;  // sum over processed events of e^{-beta (t_last - t_j)}
  double t_last = 0.0;
  std::size_t next = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const double t = grid[g];
    while (next < session.size() && session.times[next] < t) {
      decayed = decayed * std::exp(-p.beta * (session.times[next] - t_last)) + 1.0;
      t_last = session.times[next];
      ++next;
    }
    const double excite = next > 0 ? p.alpha * p.beta * decayed * std::exp(-p.beta * (t - t_last)) : 0.0;
    const double lambda = p.mu + (p.mu0 - p.mu) * p.beta * std::exp(-p.beta * t) + excite;
    out[g] = p.mu / lambda;
  }
  return out;
}

ExogenousCurve exogenous_probability_curve(const ModelSpec& spec, const PosteriorDraws& draws, std::size_t session,
                                           std::span<const double> grid, double hdi_mass) {
  if (grid.empty()) throw std::invalid_argument("exogenous_probability_curve: empty grid");
  if (session >= spec.session_count()) throw std::out_of_range("exogenous_probability_curve: no such session");
  if (draws.dim() != spec.dimension()) throw std::invalid_argument("draws do not match the model");
  if (draws.total() == 0) throw std::invalid_argument("exogenous_probability_curve: no draws");
  const Session& s = spec.sessions()[session];
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (grid[g] < 0.0 || grid[g] > s.duration) throw std::invalid_argument("grid point outside the session");
    if (g > 0 && grid[g] < grid[g - 1]) throw std::invalid_argument("grid must be sorted");
  }
  const std::size_t n_draws = draws.total();
  std::vector<double> values(grid.size() * n_draws);
  const auto total = static_cast<std::ptrdiff_t>(n_draws);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t mm = 0; mm < total; ++mm) {
    const auto m = static_cast<std::size_t>(mm);
    const std::vector<double> curve = exogenous_probability(spec.session_params(draws.row(m), session), s, grid);
    for (std::size_t g = 0; g < grid.size(); ++g) values[g * n_draws + m] = curve[g];
  }
  ExogenousCurve out;
  out.session = session;
  out.hdi_mass = hdi_mass;
  out.grid.assign(grid.begin(), grid.end());
  out.median.resize(grid.size());
  out.lower.resize(grid.size());
  out.upper.resize(grid.size());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const std::span<const double> col(values.data() + g * n_draws, n_draws);
    out.median[g] = stats::quantile(col, 0.5);
    const auto [lo, hi] = stats::hdi(col, hdi_mass);
    out.lower[g] = lo;
    out.upper[g] = hi;
  }
  return out;
}

}  // namespace hawkes
