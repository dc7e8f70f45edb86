#include "hawkes/kernels.hpp"

#include <omp.h>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace hawkes {
namespace kernels {
namespace {

void check_sizes(std::size_t sessions, std::size_t params, std::size_t out, std::size_t grad) {
  if (params != sessions || out != sessions || (grad != 0 && grad != sessions)) {
    throw std::invalid_argument("batch_log_likelihood: mismatched span sizes");
  }
}

}  // namespace

void batch_log_likelihood(std::span<const Session> sessions, std::span<const HawkesParams> params,
                          std::span<double> loglik, std::span<LikelihoodGradient> gradient) {
  check_sizes(sessions.size(), params.size(), loglik.size(), gradient.size());
  const auto n = static_cast<std::ptrdiff_t>(sessions.size());
  const bool with_gradient = !gradient.empty();
#pragma omp parallel for schedule(dynamic, 8) if (n > 32 && !omp_in_parallel())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    if (with_gradient) {
      loglik[i] = log_likelihood(params[i], sessions[i], gradient[i]);
    } else {
      loglik[i] = log_likelihood(params[i], sessions[i]);
    }
  }
}

std::vector<RtctResiduals> batch_rtct(std::span<const Session> sessions,
                                      std::span<const HawkesParams> params) {
  if (sessions.size() != params.size()) {
    throw std::invalid_argument("batch_rtct: mismatched span sizes");
  }
  std::vector<RtctResiduals> out(sessions.size());
  const auto n = static_cast<std::ptrdiff_t>(sessions.size());
#pragma omp parallel for schedule(dynamic, 8) if (n > 32 && !omp_in_parallel())
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = rtct_transform(params[i], sessions[i]);
  return out;
}

double ordered_sum(std::span<const double> values) noexcept {
  double total = 0.0;
  for (double v : values) total += v;
  return total;
}

}  // namespace kernels

namespace reference {

double log_likelihood_direct(const HawkesParams& p, const Session& session) {
  const double T = session.duration;
  const double d = p.delta_mu();
  double sum_log = 0.0;
  for (std::size_t j = 0; j < session.times.size(); ++j) {
    const double t = session.times[j];
    double excitation = 0.0;
    for (std::size_t k = 0; k < j; ++k) excitation += std::exp(-p.beta * (t - session.times[k]));
    const double lambda = p.mu + d * p.beta * std::exp(-p.beta * t) + p.alpha * p.beta * excitation;
    if (!(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
    sum_log += std::log(lambda);
  }
  double kernel_mass = 0.0;
  for (double t : session.times) kernel_mass += 1.0 - std::exp(-p.beta * (T - t));
  return sum_log - (p.mu * T + d * (1.0 - std::exp(-p.beta * T)) + p.alpha * kernel_mass);
}

void batch_log_likelihood(std::span<const Session> sessions, std::span<const HawkesParams> params,
                          std::span<double> loglik, std::span<LikelihoodGradient> gradient) {
  if (params.size() != sessions.size() || loglik.size() != sessions.size() ||
      (!gradient.empty() && gradient.size() != sessions.size())) {
    throw std::invalid_argument("batch_log_likelihood: mismatched span sizes");
  }
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    if (gradient.empty()) {
      loglik[i] = log_likelihood(params[i], sessions[i]);
    } else {
      loglik[i] = log_likelihood(params[i], sessions[i], gradient[i]);
    }
  }
}

}  // namespace reference
}  // namespace hawkes
