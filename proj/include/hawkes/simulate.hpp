#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hawkes/session.hpp"

namespace hawkes {

struct SimSeed {
  std::uint64_t seed{0};
  std::uint64_t stream{0};
};

/// Raised when a run exceeds its event cap (typically alpha >= 1 over a
/// long window).
class CappedSimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultMaxEvents = 1'000'000;

struct ThinningStats {
  std::size_t proposals{0};
  std::size_t accepted{0};
  double max_intensity_to_bound{0.0};  // must never exceed 1
};

/// Ogata thinning. Between events the intensity only decays, so the
/// intensity just after the current time bounds it until the next event.
[[nodiscard]] Session simulate_session_thinning(const HawkesParams& params, double duration,
                                                SimSeed seed,
                                                std::size_t max_events = kDefaultMaxEvents,
                                                ThinningStats* stats = nullptr);

struct ClusterSession {
  Session session;
  std::vector<ParentLabel> parents;  // ground-truth forest, aligned with session.times
};

/// Cluster (branching) construction: baseline immigrants at rate mu, an
/// edge immigrant stream at rate (mu0 - mu) beta e^{-beta t}, and
/// Poisson(alpha) children per event at Exp(beta) lags.
[[nodiscard]] ClusterSession simulate_session_cluster(const HawkesParams& params, double duration,
                                                      SimSeed seed,
                                                      std::size_t max_events = kDefaultMaxEvents);

/// Population-level hyperparameters on the constrained scale. Person
/// parameters follow mean-parameterized LogNormals:
///   theta_n ~ LogNormal(log(m) - s^2 / 2, s), so E[theta_n] = m.
struct Hyperparameters {
  double mu_mu{0.05};
  double mu_alpha{0.6};
  double mu_beta{0.5};
  double sigma_mu{0.3};
  double sigma_alpha{0.3};
  double sigma_beta{0.3};
};

/// Synthetic cohort layout. Defaults follow the reference clinical cohort marginals:
/// 70 persons, a shifted-geometric session count with median 5, and
/// LogNormal session durations with mean 60 min clamped to [5, 137].
struct CohortTemplate {
  std::size_t persons{70};
  double session_count_p{0.155};
  std::size_t max_sessions{25};
  double duration_mean{60.0};
  double duration_log_sd{0.6};
  double min_duration{5.0};
  double max_duration{137.0};
  Hyperparameters hyper{};
  double delta_mu_scale{0.1};  // Half-Cauchy scale of the per-session mu0 - mu
  bool subcritical_only{false};  // redraw person alpha >= 1 (truncates the LogNormal at 1)

  void validate() const;
};

struct PersonTruth {
  double mu{0.0};
  double alpha{0.0};
  double beta{0.0};
  std::vector<double> delta_mu;  // per session
};

struct SimulatedCohort {
  Cohort cohort;
  Hyperparameters hyper;
  std::vector<PersonTruth> truth;
};

/// Draws person parameters, session counts, durations and events. Each
/// (person, session) has its own RNG stream; sessions are simulated in
/// parallel and the result does not depend on scheduling.
[[nodiscard]] SimulatedCohort simulate_cohort(const CohortTemplate& tmpl, std::uint64_t seed,
                                              std::size_t max_events = kDefaultMaxEvents);

/// Simulates sessions with the given durations for fixed person
/// parameters; delta_mu[i] applies to session i.
[[nodiscard]] Person simulate_person(const std::string& person_id, double mu, double alpha,
                                     double beta, const std::vector<double>& durations,
                                     const std::vector<double>& delta_mu, SimSeed seed,
                                     std::size_t max_events = kDefaultMaxEvents);

}  // namespace hawkes
