#include "hawkes/simulate.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>
#include <string>

#include "hawkes/rng.hpp"

namespace hawkes {

Session simulate_session_thinning(const HawkesParams& p, double duration, SimSeed seed,
                                  std::size_t max_events, ThinningStats* stats) {
  validate(p);
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  Rng rng(seed.seed, seed.stream);
  Session out;
  out.duration = duration;
  const double d = p.delta_mu();
  double s = 0.0;
  double excitation = 0.0;  // sum over events <= s of e^{-beta (s - t_j)}
  while (true) {
    const double bound = p.mu + d * p.beta * std::exp(-p.beta * s) + p.alpha * p.beta * excitation;
    const double w = rng.exponential(bound);
    const double candidate = s + w;
    if (candidate >= duration) break;
    const double decayed = excitation * std::exp(-p.beta * w);
    const double lambda = p.mu + d * p.beta * std::exp(-p.beta * candidate) + p.alpha * p.beta * decayed;
    const bool accept = rng.uniform() * bound <= lambda;
    if (stats != nullptr) {
      ++stats->proposals;
      stats->max_intensity_to_bound = std::max(stats->max_intensity_to_bound, lambda / bound);
    }
    if (accept) {
      if (out.times.size() >= max_events) {
        throw CappedSimulationError("thinning simulation exceeded " + std::to_string(max_events) +
                                    " events");
      }
      out.times.push_back(candidate);
      excitation = decayed + 1.0;
      if (stats != nullptr) ++stats->accepted;
    } else {
      excitation = decayed;
    }
    s = candidate;
  }
  return out;
}

ClusterSession simulate_session_cluster(const HawkesParams& p, double duration, SimSeed seed,
                                        std::size_t max_events) {
  validate(p);
  if (!(duration > 0.0)) throw std::invalid_argument("duration must be positive");
  Rng rng(seed.seed, seed.stream);

  struct Node {
    double time;
    ParentLabel parent;  // event parents refer to raw node indices here
  };
  std::vector<Node> nodes;
  auto push = [&](double t, ParentLabel parent) {
    if (nodes.size() >= max_events) {
      throw CappedSimulationError("cluster simulation exceeded " + std::to_string(max_events) +
                                  " events");
    }
    nodes.push_back({t, parent});
  };

  const std::uint64_t immigrants = rng.poisson(p.mu * duration);
  for (std::uint64_t i = 0; i < immigrants; ++i) {
    push(rng.uniform() * duration, {ParentLabel::Kind::exogenous, 0});
  }
  // Inverse-CDF draws from the density proportional to e^{-beta t} on [0, T).
  const double window_mass = -std::expm1(-p.beta * duration);
  const std::uint64_t edge = rng.poisson(p.delta_mu() * window_mass);
  for (std::uint64_t i = 0; i < edge; ++i) {
    push(-std::log1p(-rng.uniform() * window_mass) / p.beta, {ParentLabel::Kind::edge, 0});
  }
  for (std::size_t next = 0; next < nodes.size(); ++next) {
    const std::uint64_t children = rng.poisson(p.alpha);
    const double parent_time = nodes[next].time;
    for (std::uint64_t c = 0; c < children; ++c) {
      const double t = parent_time + rng.exponential(p.beta);
      if (t < duration) push(t, {ParentLabel::Kind::event, next});
    }
  }

  std::vector<std::size_t> order(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return nodes[a].time < nodes[b].time; });
  std::vector<std::size_t> position(nodes.size());
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = i;

  ClusterSession out;
  out.session.duration = duration;
  out.session.times.reserve(nodes.size());
  out.parents.reserve(nodes.size());
  for (std::size_t i : order) {
    out.session.times.push_back(nodes[i].time);
    ParentLabel label = nodes[i].parent;
    if (label.kind == ParentLabel::Kind::event) label.index = position[label.index];
    out.parents.push_back(label);
  }
  return out;
}

void CohortTemplate::validate() const {
  if (persons == 0) throw std::invalid_argument("template needs at least one person");
  if (!(session_count_p > 0.0 && session_count_p <= 1.0)) {
    throw std::invalid_argument("session_count_p must be in (0, 1]");
  }
  if (max_sessions == 0) throw std::invalid_argument("max_sessions must be positive");
  if (!(duration_mean > 0.0) || !(duration_log_sd >= 0.0) || !(min_duration > 0.0) ||
      !(max_duration >= min_duration)) {
    throw std::invalid_argument("invalid duration distribution");
  }
  const double h[] = {hyper.mu_mu, hyper.mu_alpha, hyper.mu_beta,
                      hyper.sigma_mu, hyper.sigma_alpha, hyper.sigma_beta};
  for (double v : h) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("hyperparameters must be > 0");
  }
  if (!(hyper.mu_alpha < 1.0)) throw std::invalid_argument("mu_alpha must be < 1");
  if (!(delta_mu_scale >= 0.0)) throw std::invalid_argument("delta_mu_scale must be >= 0");
}

Person simulate_person(const std::string& person_id, double mu, double alpha, double beta,
                       const std::vector<double>& durations, const std::vector<double>& delta_mu,
                       SimSeed seed, std::size_t max_events) {
  if (durations.size() != delta_mu.size()) {
    throw std::invalid_argument("simulate_person: durations and delta_mu differ in length");
  }
  Person person;
  person.id = person_id;
  person.sessions.resize(durations.size());
  for (std::size_t i = 0; i < durations.size(); ++i) {
    const HawkesParams params{mu, alpha, beta, mu + delta_mu[i]};
    Session s = simulate_session_thinning(params, durations[i],
                                          {seed.seed, stream_id(seed.stream, i)}, max_events);
    s.person_id = person_id;
    s.session_id = "s" + std::to_string(i);
    person.sessions[i] = std::move(s);
  }
  return person;
}

SimulatedCohort simulate_cohort(const CohortTemplate& tmpl, std::uint64_t seed,
                                std::size_t max_events) {
  tmpl.validate();
  SimulatedCohort out;
  out.hyper = tmpl.hyper;
  out.truth.resize(tmpl.persons);
  out.cohort.persons.resize(tmpl.persons);

  const std::uint64_t person_base = stream_id("simulate/person");
  const std::uint64_t session_base = stream_id("simulate/session");
  auto lognormal_mean = [](Rng& rng, double m, double s) {
    return std::exp(std::log(m) - 0.5 * s * s + s * rng.normal());
  };
  const double log_duration_location =
      std::log(tmpl.duration_mean) - 0.5 * tmpl.duration_log_sd * tmpl.duration_log_sd;

  struct Job {
    std::size_t person;
    std::size_t session;
    HawkesParams params;
    double duration;
  };
  std::vector<Job> jobs;
  for (std::size_t n = 0; n < tmpl.persons; ++n) {
    Rng rng(seed, stream_id(person_base, n));
    PersonTruth& truth = out.truth[n];
    truth.mu = lognormal_mean(rng, tmpl.hyper.mu_mu, tmpl.hyper.sigma_mu);
    truth.alpha = lognormal_mean(rng, tmpl.hyper.mu_alpha, tmpl.hyper.sigma_alpha);
    while (tmpl.subcritical_only && truth.alpha >= 1.0) {
      truth.alpha = lognormal_mean(rng, tmpl.hyper.mu_alpha, tmpl.hyper.sigma_alpha);
    }
    truth.beta = lognormal_mean(rng, tmpl.hyper.mu_beta, tmpl.hyper.sigma_beta);

    std::size_t count = 1;
    if (tmpl.session_count_p < 1.0) {
      count += static_cast<std::size_t>(std::floor(std::log(rng.uniform()) /
                                                   std::log1p(-tmpl.session_count_p)));
    }
    count = std::min(count, tmpl.max_sessions);

    Person& person = out.cohort.persons[n];
    person.id = "p" + std::to_string(n);
    person.sessions.resize(count);
    truth.delta_mu.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const double duration =
          std::clamp(std::exp(log_duration_location + tmpl.duration_log_sd * rng.normal()),
                     tmpl.min_duration, tmpl.max_duration);
      const double delta =
          tmpl.delta_mu_scale * std::abs(std::tan(std::numbers::pi * (rng.uniform() - 0.5)));
      truth.delta_mu[i] = delta;
      jobs.push_back({n, i, {truth.mu, truth.alpha, truth.beta, truth.mu + delta}, duration});
    }
  }

  std::exception_ptr failure;
  const auto n_jobs = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t k = 0; k < n_jobs; ++k) {
    const Job& job = jobs[k];
    try {
      Session s = simulate_session_thinning(
          job.params, job.duration, {seed, stream_id(session_base, job.person, job.session)},
          max_events);
      s.person_id = "p" + std::to_string(job.person);
      s.session_id = "s" + std::to_string(job.session);
      out.cohort.persons[job.person].sessions[job.session] = std::move(s);
    } catch (...) {
#pragma omp critical(simulate_cohort_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace hawkes
