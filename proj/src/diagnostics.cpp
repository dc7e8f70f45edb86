#include "hawkes/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "hawkes/stats.hpp"

namespace hawkes {
namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

bool degenerate(const ChainSeries& chains) {
  if (chains.empty() || chains.front().size() < 2) return true;
  const double first = chains.front().front();
  bool constant = true;
  for (const auto& c : chains) {
    if (c.size() != chains.front().size()) throw std::invalid_argument("chains differ in length");
    for (double v : c) {
      if (!std::isfinite(v)) return true;
      if (v != first) constant = false;
    }
  }
  return constant;
}

ChainSeries split(const ChainSeries& chains) {
  ChainSeries out;
  for (const auto& c : chains) {
    const std::size_t n = c.size();
    const std::size_t half = n / 2;
    out.emplace_back(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half));
    out.emplace_back(c.begin() + static_cast<std::ptrdiff_t>(n - half), c.end());
  }
  return out;
}

std::vector<double> pooled(const ChainSeries& chains) {
  std::vector<double> all;
  for (const auto& c : chains) all.insert(all.end(), c.begin(), c.end());
  return all;
}

ChainSeries reshape_like(const std::vector<double>& flat, const ChainSeries& like) {
  ChainSeries out;
  std::size_t pos = 0;
  for (const auto& c : like) {
    out.emplace_back(flat.begin() + static_cast<std::ptrdiff_t>(pos),
                     flat.begin() + static_cast<std::ptrdiff_t>(pos + c.size()));
    pos += c.size();
  }
  return out;
}

ChainSeries z_scale(const ChainSeries& chains) {
  const std::vector<double> all = pooled(chains);
  const std::vector<double> ranks = stats::average_ranks(all);
  const double s = static_cast<double>(all.size());
  std::vector<double> z(all.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = stats::normal_quantile((ranks[i] - 0.375) / (s + 0.25));
  return reshape_like(z, chains);
}

ChainSeries fold(const ChainSeries& chains) {
  const double med = stats::quantile(pooled(chains), 0.5);
  ChainSeries out = chains;
  for (auto& c : out) {
    for (auto& v : c) v = std::abs(v - med);
  }
  return out;
}

ChainSeries indicator(const ChainSeries& chains, double threshold) {
  ChainSeries out = chains;
  for (auto& c : out) {
    for (auto& v : c) v = v <= threshold ? 1.0 : 0.0;
  }
  return out;
}

// ESS of already-prepared chains (no splitting).
double ess_chains(const ChainSeries& chains) {
  if (degenerate(chains)) return kNaN;
  const std::size_t m = chains.size();
  const std::size_t n = chains.front().size();
  if (n < 4) return kNaN;
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = stats::mean(chains[c]);
    vars[c] = stats::variance(chains[c]);
  }
  const double mean_var = stats::mean(vars);
  double var_plus = mean_var * static_cast<double>(n - 1) / static_cast<double>(n);
  if (m > 1) var_plus += stats::variance(means);
  if (!(var_plus > 0.0)) return kNaN;

  // Biased autocovariance averaged over chains, computed on demand.
  auto mean_acov = [&](std::size_t lag) {
    double total = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const auto& x = chains[c];
      double s = 0.0;
      for (std::size_t i = 0; i + lag < n; ++i) s += (x[i] - means[c]) * (x[i + lag] - means[c]);
      total += s / static_cast<double>(n);
    }
    return total / static_cast<double>(m);
  };
  auto rho = [&](std::size_t lag) { return 1.0 - (mean_var - mean_acov(lag)) / var_plus; };

  std::vector<double> r(n, 0.0);
  std::size_t t = 0;
  double even = 1.0;
  double odd = rho(1);
  r[0] = even;
  r[1] = odd;
  while (t + 5 < n && std::isfinite(even + odd) && even + odd > 0.0) {
    t += 2;
    even = rho(t);
    odd = rho(t + 1);
    if (even + odd >= 0.0) {
      r[t] = even;
      r[t + 1] = odd;
    }
  }
  const std::size_t max_t = t;
  if (even > 0.0) r[max_t] = even;
  t = 0;
  while (t + 4 <= max_t) {
    t += 2;
    if (r[t] + r[t + 1] > r[t - 2] + r[t - 1]) {
      r[t] = 0.5 * (r[t - 2] + r[t - 1]);
      r[t + 1] = r[t];
    }
  }
  const double s = static_cast<double>(m * n);
  double tau = -1.0 + r[max_t];
  for (std::size_t k = 0; k < max_t; ++k) tau += 2.0 * r[k];
  tau = std::max(tau, 1.0 / std::log10(s));
  return s / tau;
}

double rhat_chains(const ChainSeries& chains) {
  if (degenerate(chains) || chains.size() < 2) return kNaN;
  const std::size_t m = chains.size();
  const double n = static_cast<double>(chains.front().size());
  std::vector<double> means(m), vars(m);
  for (std::size_t c = 0; c < m; ++c) {
    means[c] = stats::mean(chains[c]);
    vars[c] = stats::variance(chains[c]);
  }
  const double between = n * stats::variance(means);
  const double within = stats::mean(vars);
  if (!(within > 0.0)) return kNaN;
  return std::sqrt((between / within + n - 1.0) / n);
}

}  // namespace

namespace diag {

double rhat_basic(const ChainSeries& chains) {
  if (chains.size() < 2) return kNaN;
  return rhat_chains(split(chains));
}

double rhat(const ChainSeries& chains) {
  if (chains.size() < 2 || degenerate(chains)) return kNaN;
  const double bulk = rhat_chains(split(z_scale(chains)));
  const double tail = rhat_chains(split(z_scale(fold(chains))));
  if (std::isnan(bulk) || std::isnan(tail)) return kNaN;
  return std::max(bulk, tail);
}

double ess_basic(const ChainSeries& chains) { return ess_chains(split(chains)); }

double ess_bulk(const ChainSeries& chains) {
  if (degenerate(chains)) return kNaN;
  return ess_chains(split(z_scale(chains)));
}

double ess_tail(const ChainSeries& chains) {
  if (degenerate(chains)) return kNaN;
  const std::vector<double> all = pooled(chains);
  const double lo = ess_chains(split(indicator(chains, stats::quantile(all, 0.05))));
  const double hi = ess_chains(split(indicator(chains, stats::quantile(all, 0.95))));
  if (std::isnan(lo) || std::isnan(hi)) return kNaN;
  return std::min(lo, hi);
}

double mcse_sd(const ChainSeries& chains) {
  if (degenerate(chains)) return kNaN;
  ChainSeries sq = chains;
  for (auto& c : sq) {
    for (auto& v : c) v *= v;
  }
  const double ess_sd = std::min(ess_basic(chains), ess_basic(sq));
  if (!std::isfinite(ess_sd)) return kNaN;
  const double sd = stats::sd(pooled(chains));
  const double f = std::exp(1.0) * std::pow(1.0 - 1.0 / ess_sd, ess_sd - 1.0) - 1.0;
  return sd * std::sqrt(std::max(f, 0.0));
}

std::vector<std::vector<std::size_t>> rank_histogram(const ChainSeries& chains, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("rank_histogram: bins must be positive");
  const std::vector<double> all = pooled(chains);
  const std::vector<double> ranks = stats::average_ranks(all);
  const double s = static_cast<double>(all.size());
  std::vector<std::vector<std::size_t>> hist(chains.size(), std::vector<std::size_t>(bins, 0));
  std::size_t pos = 0;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    for (std::size_t i = 0; i < chains[c].size(); ++i, ++pos) {
      auto b = static_cast<std::size_t>((ranks[pos] - 1.0) / s * static_cast<double>(bins));
      ++hist[c][std::min(b, bins - 1)];
    }
  }
  return hist;
}

}  // namespace diag

ParamSummary summarize(const std::string& name, const ChainSeries& chains) {
  ParamSummary p;
  p.name = name;
  const std::vector<double> all = pooled(chains);
  p.mean = stats::mean(all);
  p.sd = all.size() > 1 ? stats::sd(all) : kNaN;
  p.q05 = stats::quantile(all, 0.05);
  p.median = stats::quantile(all, 0.5);
  p.q95 = stats::quantile(all, 0.95);
  p.ess_bulk = diag::ess_bulk(chains);
  p.ess_tail = diag::ess_tail(chains);
  p.rhat = diag::rhat(chains);
  p.mcse_mean = p.sd / std::sqrt(p.ess_bulk);
  p.mcse_sd = diag::mcse_sd(chains);
  return p;
}

const ParamSummary& Diagnostics::at(std::string_view name) const {
  for (const auto& p : params) {
    if (p.name == name) return p;
  }
  throw std::out_of_range("no diagnostics for '" + std::string(name) + "'");
}

Diagnostics diagnostics(const PosteriorDraws& draws, std::size_t rank_bins) {
  Diagnostics out;
  out.divergent = draws.divergent_count();
  out.total_draws = draws.total();
  out.bins = rank_bins;
  out.params.resize(draws.dim());
  out.rank_hist.resize(draws.dim());
  const auto dim = static_cast<std::ptrdiff_t>(draws.dim());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t kk = 0; kk < dim; ++kk) {
    const auto k = static_cast<std::size_t>(kk);
    const ChainSeries chains = draws.by_chain(k);
    out.params[k] = summarize(draws.names[k], chains);
    out.rank_hist[k] = diag::rank_histogram(chains, rank_bins);
  }
  return out;
}

GateResult check_gate(const Diagnostics& d, const ConvergenceGate& gate) {
  GateResult r;
  for (const auto& p : d.params) {
    if (!(p.rhat < gate.max_rhat)) {
      r.failures.push_back(p.name + ": r-hat " + std::to_string(p.rhat));
    }
    if (!(p.ess_bulk >= gate.min_ess)) {
      r.failures.push_back(p.name + ": ess-bulk " + std::to_string(p.ess_bulk));
    }
  }
  if (d.divergent > gate.max_divergent) {
    r.failures.push_back(std::to_string(d.divergent) + " divergent transitions");
  }
  r.passed = r.failures.empty();
  return r;
}

}  // namespace hawkes
