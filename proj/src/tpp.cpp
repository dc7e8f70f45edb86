#include "hawkes/tpp.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace hawkes {
namespace {

void check_time(const Session& session, double t) {
  if (!(t >= 0.0 && t <= session.duration)) {
    throw std::domain_error("time " + std::to_string(t) + " outside [0, " +
                            std::to_string(session.duration) + "]");
  }
}

}  // namespace

double intensity(const HawkesParams& p, const Session& history, double t) {
  check_time(history, t);
  double excitation = 0.0;
  for (double tj : history.times) {
    if (tj >= t) break;
    excitation += std::exp(-p.beta * (t - tj));
  }
  return p.mu + p.delta_mu() * p.beta * std::exp(-p.beta * t) + p.alpha * p.beta * excitation;
}

double cumulative_intensity(const HawkesParams& p, const Session& session, double t) {
  check_time(session, t);
  double kernel_mass = 0.0;
  for (double tj : session.times) {
    if (tj >= t) break;
    kernel_mass += -std::expm1(-p.beta * (t - tj));
  }
  return p.mu * t + p.delta_mu() * -std::expm1(-p.beta * t) + p.alpha * kernel_mass;
}

double log_likelihood(const HawkesParams& p, const Session& session) {
  const double T = session.duration;
  const double d = p.delta_mu();
  double sum_log = 0.0;
  double a = 0.0;  // A_j
  double prev = 0.0;
  double kernel_mass = 0.0;
  for (std::size_t j = 0; j < session.times.size(); ++j) {
    const double t = session.times[j];
    if (j > 0) a = std::exp(-p.beta * (t - prev)) * (1.0 + a);
    const double lambda = p.mu + d * p.beta * std::exp(-p.beta * t) + p.alpha * p.beta * a;
    if (!(lambda > 0.0)) return -std::numeric_limits<double>::infinity();
    sum_log += std::log(lambda);
    kernel_mass += -std::expm1(-p.beta * (T - t));
    prev = t;
  }
  const double compensator = p.mu * T + d * -std::expm1(-p.beta * T) + p.alpha * kernel_mass;
  return sum_log - compensator;
}

double log_likelihood(const HawkesParams& p, const Session& session, LikelihoodGradient& g) {
  const double T = session.duration;
  const double d = p.delta_mu();
  const double beta = p.beta;
  g = {};
  double sum_log = 0.0;
  double a = 0.0;  // sum_{k<j} e^{-beta (t_j - t_k)}
  double b = 0.0;  // sum_{k<j} (t_j - t_k) e^{-beta (t_j - t_k)}
  double prev = 0.0;
  double kernel_mass = 0.0;
  double kernel_mass_dbeta = 0.0;
  for (std::size_t j = 0; j < session.times.size(); ++j) {
    const double t = session.times[j];
    if (j > 0) {
      const double dt = t - prev;
      const double decay = std::exp(-beta * dt);
      b = decay * (b + dt * (1.0 + a));
      a = decay * (1.0 + a);
    }
    const double edge = std::exp(-beta * t);
    const double lambda = p.mu + d * beta * edge + p.alpha * beta * a;
    if (!(lambda > 0.0)) {
      g = {};
      return -std::numeric_limits<double>::infinity();
    }
    const double inv = 1.0 / lambda;
    sum_log += std::log(lambda);
    g.mu += inv;
    g.delta_mu += beta * edge * inv;
    g.alpha += beta * a * inv;
    g.beta += (d * edge * (1.0 - beta * t) + p.alpha * (a - beta * b)) * inv;

    const double tail = T - t;
    const double tail_decay = std::exp(-beta * tail);
    kernel_mass += -std::expm1(-beta * tail);
    kernel_mass_dbeta += tail * tail_decay;
    prev = t;
  }
  const double window_decay = std::exp(-beta * T);
  const double compensator = p.mu * T + d * -std::expm1(-beta * T) + p.alpha * kernel_mass;
  g.mu -= T;
  g.delta_mu -= -std::expm1(-beta * T);
  g.alpha -= kernel_mass;
  g.beta -= d * T * window_decay + p.alpha * kernel_mass_dbeta;
  return sum_log - compensator;
}

RtctResiduals rtct_transform(const HawkesParams& p, const Session& session) {
  RtctResiduals out;
  const double d = p.delta_mu();
  const std::size_t n = session.times.size();
  out.transformed_times.reserve(n);
  out.interarrivals.reserve(n);
  // Increment over (t_{j-1}, t_j], dt = t_j - t_{j-1}:
  //   mu dt + (1 - e^{-beta dt}) (d e^{-beta t_{j-1}} + alpha (1 + A_{j-1}))
  double a = 0.0;
  double prev = 0.0;
  double mass = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double t = session.times[j];
    double step = 0.0;
    if (j == 0) {
      step = p.mu * t + d * -std::expm1(-p.beta * t);
    } else {
      const double dt = t - prev;
      const double spread = -std::expm1(-p.beta * dt);
      step = p.mu * dt + spread * (d * std::exp(-p.beta * prev) + p.alpha * (1.0 + a));
      a = std::exp(-p.beta * dt) * (1.0 + a);
    }
    mass += step;
    out.transformed_times.push_back(mass);
    out.interarrivals.push_back(step);
    prev = t;
  }
  out.total_mass = cumulative_intensity(p, session, session.duration);
  return out;
}

}  // namespace hawkes
