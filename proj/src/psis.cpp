#include "hawkes/psis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "hawkes/stats.hpp"

namespace hawkes {
namespace {

const double kInf = std::numeric_limits<double>::infinity();

double gpd_quantile(double p, double k, double sigma) {
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

}  // namespace

GpdFit gpd_fit(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("gpd_fit: need at least two exceedances");
  const double prior = 3.0;
  const std::size_t m = 30 + static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))));
  const double x_star = x[static_cast<std::size_t>(std::floor(static_cast<double>(n) / 4.0 + 0.5)) - 1];
  const double x_max = x[n - 1];
  std::vector<double> theta(m), log_lik(m);
  for (std::size_t j = 0; j < m; ++j) {
    theta[j] = 1.0 / x_max +
               (1.0 - std::sqrt(static_cast<double>(m) / (static_cast<double>(j + 1) - 0.5))) / prior / x_star;
    double k = 0.0;
    for (double v : x) k += std::log1p(-theta[j] * v);
    k /= static_cast<double>(n);
    log_lik[j] = static_cast<double>(n) * (std::log(-theta[j] / k) - k - 1.0);
  }
  const double norm = stats::log_sum_exp(log_lik);
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < m; ++j) theta_hat += theta[j] * std::exp(log_lik[j] - norm);
  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= static_cast<double>(n);
  GpdFit fit;
  fit.sigma = -k / theta_hat;
  const double nd = static_cast<double>(n);
  fit.k = (k * nd + 0.5 * 10.0) / (nd + 10.0);
  if (std::isnan(fit.k)) fit.k = kInf;
  return fit;
}

std::size_t psis_tail_length(std::size_t draws) noexcept {
  const double s = static_cast<double>(draws);
  return static_cast<std::size_t>(std::ceil(std::min(0.2 * s, 3.0 * std::sqrt(s))));
}

PsisWeights psis(std::span<const double> log_ratios) {
  const std::size_t s = log_ratios.size();
  if (s == 0) throw std::invalid_argument("psis: no draws");
  for (double v : log_ratios) {
    if (!std::isfinite(v)) throw std::invalid_argument("psis: non-finite log ratio");
  }
  PsisWeights out;
  const double max_lr = *std::max_element(log_ratios.begin(), log_ratios.end());
  std::vector<double> lw(s);
  for (std::size_t i = 0; i < s; ++i) lw[i] = log_ratios[i] - max_lr;

  const double min_lr = *std::min_element(lw.begin(), lw.end());
  if (min_lr == 0.0) {
    out.log_weights.assign(s, -std::log(static_cast<double>(s)));
    out.smoothed.assign(s, 0.0);
    out.k_hat = -kInf;
    return out;
  }

  out.k_hat = kInf;
  const std::size_t tail = psis_tail_length(s);
  if (tail >= 5 && tail < s) {
    std::vector<std::size_t> order(s);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lw[a] < lw[b]; });
    const std::size_t first = s - tail;
    const double cutoff = lw[order[first - 1]];
    const double tail_min = lw[order[first]];
    const double tail_max = lw[order[s - 1]];
    if (std::abs(tail_max - tail_min) >= std::numeric_limits<double>::epsilon() / 100.0) {
      const double exp_cutoff = std::exp(cutoff);
      std::vector<double> exceed(tail);
      for (std::size_t j = 0; j < tail; ++j) exceed[j] = std::exp(lw[order[first + j]]) - exp_cutoff;
      const GpdFit fit = gpd_fit(exceed);
      out.k_hat = fit.k;
      if (std::isfinite(fit.k)) {
        for (std::size_t j = 0; j < tail; ++j) {
          const double p = (static_cast<double>(j) + 0.5) / static_cast<double>(tail);
          lw[order[first + j]] = std::log(gpd_quantile(p, fit.k, fit.sigma) + exp_cutoff);
        }
      }
    }
  }
  // Truncate at the raw maximum, which is zero after the shift.
  for (auto& v : lw) v = std::min(v, 0.0);
  out.smoothed = lw;
  const double norm = stats::log_sum_exp(lw);
  for (auto& v : lw) v -= norm;
  out.log_weights = std::move(lw);
  return out;
}

LooResult psis_loo(std::span<const double> loglik, std::size_t draws, std::size_t sessions,
                   std::string model) {
  if (loglik.size() != draws * sessions) throw std::invalid_argument("psis_loo: matrix shape mismatch");
  if (draws < 100) throw std::invalid_argument("psis_loo: need at least 100 draws");
  for (double v : loglik) {
    if (!std::isfinite(v)) throw std::invalid_argument("psis_loo: non-finite log-likelihood");
  }
  LooResult out;
  out.model = std::move(model);
  out.elpd_i.resize(sessions);
  out.k_hat.resize(sessions);
  out.p_loo_i.resize(sessions);
  const auto n_sessions = static_cast<std::ptrdiff_t>(sessions);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t ii = 0; ii < n_sessions; ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    std::vector<double> ll(draws), neg(draws);
    for (std::size_t d = 0; d < draws; ++d) {
      ll[d] = loglik[d * sessions + i];
      neg[d] = -ll[d];
    }
    const PsisWeights w = psis(neg);
    std::vector<double> lw_ll(draws);
    for (std::size_t d = 0; d < draws; ++d) lw_ll[d] = w.log_weights[d] + ll[d];
    out.elpd_i[i] = stats::log_sum_exp(lw_ll);  // weights already normalized
    out.k_hat[i] = w.k_hat;
    const double lppd_i = stats::log_sum_exp(ll) - std::log(static_cast<double>(draws));
    out.p_loo_i[i] = lppd_i - out.elpd_i[i];
  }
  for (std::size_t i = 0; i < sessions; ++i) {
    out.elpd += out.elpd_i[i];
    out.p_loo += out.p_loo_i[i];
    if (out.k_hat[i] > 0.7) ++out.high_k;
  }
  out.lppd = out.elpd + out.p_loo;
  out.se = sessions > 1 ? std::sqrt(static_cast<double>(sessions) * stats::variance(out.elpd_i)) : 0.0;
  return out;
}

LooResult psis_loo(const PosteriorDraws& posterior) {
  return psis_loo(posterior.session_loglik, posterior.total(), posterior.sessions, posterior.model);
}

std::vector<double> stacking_weights(const std::vector<std::vector<double>>& elpd, double tolerance,
                                     std::size_t max_iterations) {
  const std::size_t k = elpd.size();
  if (k == 0) throw std::invalid_argument("stacking_weights: no models");
  const std::size_t n = elpd.front().size();
  for (const auto& row : elpd) {
    if (row.size() != n) throw std::invalid_argument("stacking_weights: models cover different sessions");
  }
  if (k == 1) return {1.0};
  if (n == 0) throw std::invalid_argument("stacking_weights: no sessions");

  // Per-session densities rescaled by the row maximum; the objective changes
  // only by a constant.
  std::vector<double> dens(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    double m = -kInf;
    for (std::size_t j = 0; j < k; ++j) m = std::max(m, elpd[j][i]);
    for (std::size_t j = 0; j < k; ++j) dens[i * k + j] = std::exp(elpd[j][i] - m);
  }
  std::vector<double> w(k, 1.0 / static_cast<double>(k));
  std::vector<double> g(k);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    std::fill(g.begin(), g.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double mix = 0.0;
      for (std::size_t j = 0; j < k; ++j) mix += w[j] * dens[i * k + j];
      for (std::size_t j = 0; j < k; ++j) g[j] += dens[i * k + j] / mix;
    }
    // Normalized gradient: w . g == 1 at every iterate.
    double residual = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      g[j] /= static_cast<double>(n);
      const double r = w[j] * (g[j] - 1.0);
      residual += r * r;
    }
    if (std::sqrt(residual) < tolerance) return w;
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      w[j] *= g[j];
      total += w[j];
    }
    for (auto& v : w) v /= total;
  }
  throw StackingError("stacking did not converge", w);
}

std::vector<CompareRow> compare(const std::vector<LooResult>& results) {
  if (results.empty()) throw std::invalid_argument("compare: no models");
  const std::size_t n = results.front().elpd_i.size();
  for (const auto& r : results) {
    if (r.elpd_i.size() != n) throw std::invalid_argument("compare: models cover different sessions");
  }
  std::vector<std::vector<double>> pointwise;
  for (const auto& r : results) pointwise.push_back(r.elpd_i);
  std::vector<double> weights;
  try {
    weights = stacking_weights(pointwise);
  } catch (const StackingError& e) {
    weights = e.best;
  }

  std::vector<std::size_t> order(results.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return results[a].elpd > results[b].elpd; });
  const LooResult& best = results[order.front()];
  std::vector<CompareRow> rows;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const LooResult& res = results[order[r]];
    CompareRow row;
    row.model = res.model;
    row.rank = r;
    row.elpd = res.elpd;
    row.p_loo = res.p_loo;
    row.elpd_diff = res.elpd - best.elpd;
    row.weight = weights[order[r]];
    row.se = res.se;
    row.high_k = res.high_k;
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = res.elpd_i[i] - best.elpd_i[i];
    row.dse = n > 1 ? std::sqrt(static_cast<double>(n) * stats::variance(diff)) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hawkes
