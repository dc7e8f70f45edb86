#pragma once

#include <span>
#include <vector>

#include "hawkes/session.hpp"
#include "hawkes/tpp.hpp"

namespace hawkes {

// Batched evaluation over many sessions. The OpenMP kernels write one slot
// per session, so results do not depend on thread count or scheduling. They
// fall back to serial execution when already inside a parallel region.
namespace kernels {

/// loglik[i] = log L(params[i] | sessions[i]); gradient filled when non-empty.
void batch_log_likelihood(std::span<const Session> sessions, std::span<const HawkesParams> params,
                          std::span<double> loglik, std::span<LikelihoodGradient> gradient = {});

[[nodiscard]] std::vector<RtctResiduals> batch_rtct(std::span<const Session> sessions,
                                                    std::span<const HawkesParams> params);

/// Ordered (serial) sum, so totals are bit-stable across thread counts.
[[nodiscard]] double ordered_sum(std::span<const double> values) noexcept;

}  // namespace kernels

// Serial, deliberately naive implementations kept as test oracles and as
// the baseline for the benchmark target.
namespace reference {

/// O(n^2) double sum: sum_j log(mu + edge + alpha beta sum_{k<j} e^{-beta (t_j - t_k)}) - Lambda(T).
[[nodiscard]] double log_likelihood_direct(const HawkesParams& params, const Session& session);

void batch_log_likelihood(std::span<const Session> sessions, std::span<const HawkesParams> params,
                          std::span<double> loglik, std::span<LikelihoodGradient> gradient = {});

}  // namespace reference

}  // namespace hawkes
