#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hawkes/nuts.hpp"

namespace hawkes {

/// Draws of one scalar, one inner vector per chain (equal lengths).
using ChainSeries = std::vector<std::vector<double>>;

namespace diag {

/// Rank-normalized split-R-hat: max of the bulk and folded variants.
/// NaN for a single chain or degenerate (constant / non-finite) draws.
[[nodiscard]] double rhat(const ChainSeries& chains);
/// Classic split-R-hat without rank normalization.
[[nodiscard]] double rhat_basic(const ChainSeries& chains);
/// ESS of split chains, Geyer initial monotone sequence. NaN if degenerate.
[[nodiscard]] double ess_basic(const ChainSeries& chains);
[[nodiscard]] double ess_bulk(const ChainSeries& chains);
/// min of the ESS of the 5% and 95% quantile indicators.
[[nodiscard]] double ess_tail(const ChainSeries& chains);
[[nodiscard]] double mcse_sd(const ChainSeries& chains);

/// Pooled ranks binned per chain: hist[c][b].
[[nodiscard]] std::vector<std::vector<std::size_t>> rank_histogram(const ChainSeries& chains,
                                                                   std::size_t bins);

}  // namespace diag

struct ParamSummary {
  std::string name;
  double mean{0.0};
  double sd{0.0};
  double q05{0.0};
  double median{0.0};
  double q95{0.0};
  double mcse_mean{0.0};
  double mcse_sd{0.0};
  double ess_bulk{0.0};
  double ess_tail{0.0};
  double rhat{0.0};
};

[[nodiscard]] ParamSummary summarize(const std::string& name, const ChainSeries& chains);

struct Diagnostics {
  std::vector<ParamSummary> params;
  std::size_t divergent{0};
  std::size_t total_draws{0};
  std::size_t bins{0};
  std::vector<std::vector<std::vector<std::size_t>>> rank_hist;  // [param][chain][bin]

  [[nodiscard]] const ParamSummary& at(std::string_view name) const;
};

[[nodiscard]] Diagnostics diagnostics(const PosteriorDraws& draws, std::size_t rank_bins = 20);

struct ConvergenceGate {
  double max_rhat{1.05};
  double min_ess{100.0};
  std::size_t max_divergent{0};
};

struct GateResult {
  bool passed{true};
  std::vector<std::string> failures;
};

/// Non-finite R-hat or ESS values count as failures.
[[nodiscard]] GateResult check_gate(const Diagnostics& diag, const ConvergenceGate& gate);

}  // namespace hawkes
