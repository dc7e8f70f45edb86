#pragma once

#include <vector>

#include "hawkes/session.hpp"

namespace hawkes {

// Closed-form quantities of the edge-corrected exponential Hawkes process
//
//   lambda(t) = mu + (mu0 - mu) beta e^{-beta t} + alpha beta sum_{t_j < t} e^{-beta (t - t_j)}
//
// All history sums use strict inequality: an event at t is not part of
// the history at t.

/// Conditional intensity at t. Throws std::domain_error if t is outside
/// [0, duration].
[[nodiscard]] double intensity(const HawkesParams& params, const Session& history, double t);

/// Expected number of events in [0, t].
[[nodiscard]] double cumulative_intensity(const HawkesParams& params, const Session& session,
                                          double t);

/// Session log-likelihood sum_j log lambda(t_j) - Lambda(T), evaluated with
/// the O(n) recursion A_j = e^{-beta (t_j - t_{j-1})} (1 + A_{j-1}).
/// Returns -inf when some lambda(t_j) is not strictly positive.
[[nodiscard]] double log_likelihood(const HawkesParams& params, const Session& session);

/// Partial derivatives of the session log-likelihood with respect to
/// (mu, alpha, beta, delta_mu) where mu0 = mu + delta_mu; mu moves with
/// delta_mu held fixed.
struct LikelihoodGradient {
  double mu{0.0};
  double alpha{0.0};
  double beta{0.0};
  double delta_mu{0.0};
};

[[nodiscard]] double log_likelihood(const HawkesParams& params, const Session& session,
                                    LikelihoodGradient& gradient);

struct RtctResiduals {
  std::vector<double> transformed_times;  // Lambda(t_j)
  std::vector<double> interarrivals;      // Lambda(t_j) - Lambda(t_{j-1}), Lambda(t_0) = 0
  double total_mass{0.0};                 // Lambda(T)
};

/// Random time change of the session's events. An empty session yields
/// empty residual vectors with total_mass = Lambda(T).
[[nodiscard]] RtctResiduals rtct_transform(const HawkesParams& params, const Session& session);

}  // namespace hawkes
