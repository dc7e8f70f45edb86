#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hawkes/nuts.hpp"

namespace hawkes {

struct GpdFit {
  double k{0.0};
  double sigma{0.0};
};

/// Zhang-Stephens profile fit of a generalized Pareto to positive
/// exceedances (sorted ascending), with the weakly informative shrinkage of k.
[[nodiscard]] GpdFit gpd_fit(std::span<const double> sorted_exceedances);

struct PsisWeights {
  std::vector<double> log_weights;  // smoothed, truncated, normalized to sum 1
  std::vector<double> smoothed;     // smoothed log ratios relative to the raw maximum
  double k_hat{0.0};                // -inf when every ratio is equal
};

/// Pareto-smoothed importance weights from log importance ratios.
[[nodiscard]] PsisWeights psis(std::span<const double> log_ratios);

/// Tail length used for the Pareto fit: ceil(min(0.2 S, 3 sqrt(S))).
[[nodiscard]] std::size_t psis_tail_length(std::size_t draws) noexcept;

struct LooResult {
  std::string model;
  std::vector<double> elpd_i;
  std::vector<double> k_hat;
  std::vector<double> p_loo_i;
  double elpd{0.0};
  double se{0.0};
  double p_loo{0.0};
  double lppd{0.0};
  std::size_t high_k{0};  // k_hat > 0.7
};

/// Leave-one-session-out PSIS-LOO from a draws x sessions log-likelihood
/// matrix stored row-major.
[[nodiscard]] LooResult psis_loo(std::span<const double> loglik, std::size_t draws,
                                 std::size_t sessions, std::string model = {});
[[nodiscard]] LooResult psis_loo(const PosteriorDraws& posterior);

class StackingError : public std::runtime_error {
 public:
  StackingError(const std::string& what, std::vector<double> best)
      : std::runtime_error(what), best(std::move(best)) {}
  std::vector<double> best;
};

/// Simplex weights maximizing sum_i log sum_k w_k exp(elpd[k][i]).
[[nodiscard]] std::vector<double> stacking_weights(const std::vector<std::vector<double>>& elpd_i,
                                                   double tolerance = 1e-8,
                                                   std::size_t max_iterations = 100000);

struct CompareRow {
  std::string model;
  std::size_t rank{0};
  double elpd{0.0};
  double p_loo{0.0};
  double elpd_diff{0.0};
  double weight{0.0};
  double se{0.0};
  double dse{0.0};
  std::size_t high_k{0};
};

/// Ranks models by elpd; elpd_diff and dse are relative to the best model.
[[nodiscard]] std::vector<CompareRow> compare(const std::vector<LooResult>& results);

}  // namespace hawkes
