#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hawkes/session.hpp"
#include "hawkes/target.hpp"

namespace hawkes {

struct PosteriorDraws;

enum class ModelKind { pooled, unpooled, partial };
/// `poisson` drops the kernel: alpha = 0 and mu0 = mu for every session.
enum class ProcessKind { hawkes, poisson };

[[nodiscard]] std::string_view to_string(ModelKind kind) noexcept;
[[nodiscard]] ModelKind parse_model_kind(std::string_view name);
[[nodiscard]] std::string_view to_string(ProcessKind kind) noexcept;

/// Prior scales. Half-Cauchy(s) and Half-Normal(s) have location 0 and
/// scale s; Gamma(k, theta) is shape-scale, so Gamma(2.5, 0.4) has mean 1.0.
struct PriorConfig {
  // partially pooled hyperpriors
  double mu_mu_scale{0.1};  // Half-Normal
  double mu_alpha_shape{2.5};
  double mu_alpha_scale{0.4};
  double mu_beta_scale{1.5};  // Half-Cauchy
  double sigma_mu_scale{1.5};
  double sigma_alpha_scale{1.0};
  double sigma_beta_scale{1.5};
  // unpooled person priors (alpha_n shares the Gamma above)
  double unpooled_mu_scale{0.1};
  double unpooled_beta_scale{1.5};
  // pooled: Uniform(0, pooled_upper) on mu, alpha, beta
  double pooled_upper{3.0};
  // every model: Half-Cauchy on per-session mu0 - mu
  double delta_mu_scale{0.1};

  void validate() const;
};

/// Exponents applied to the scalable prior and to the likelihood.
struct PowerScale {
  double prior{1.0};
  double likelihood{1.0};
};

/// One evaluation of the joint log-density on the unconstrained scale:
///   total = prior_scale * log_prior + log_prior_fixed
///         + likelihood_scale * log_likelihood + log_jacobian
struct DensityValue {
  /// Prior terms subject to power-scaling: the three Uniforms (pooled), the
  /// person-level priors (unpooled) or the six hyperpriors (partial).
  double log_prior{0.0};
  /// Structural prior terms never power-scaled: standard-normal person
  /// offsets (partial) and the per-session delta_mu priors.
  double log_prior_fixed{0.0};
  /// The branching-factor prior alone (subset of log_prior).
  double log_prior_branching{0.0};
  double log_likelihood{0.0};
  double log_jacobian{0.0};
  double total{0.0};
  bool finite{true};
  std::vector<double> gradient;        // d total / d unconstrained; empty if not requested
  std::vector<double> session_loglik;  // one entry per bound session
};

class ModelSpec final : public LogDensityTarget {
 public:
  [[nodiscard]] ModelKind kind() const noexcept { return kind_; }
  [[nodiscard]] ProcessKind process() const noexcept { return process_; }
  [[nodiscard]] std::string label() const;
  [[nodiscard]] const PriorConfig& priors() const noexcept { return priors_; }

  [[nodiscard]] std::size_t dimension() const override { return names_.size(); }
  [[nodiscard]] const std::vector<std::string>& param_names() const noexcept { return names_; }
  [[nodiscard]] std::size_t index_of(std::string_view name) const;

  [[nodiscard]] std::size_t person_count() const noexcept { return person_ids_.size(); }
  [[nodiscard]] const std::vector<std::string>& person_ids() const noexcept { return person_ids_; }
  [[nodiscard]] std::size_t session_count() const noexcept { return sessions_.size(); }
  [[nodiscard]] std::size_t delta_count() const noexcept { return n_delta_; }
  [[nodiscard]] const std::vector<Session>& sessions() const noexcept { return sessions_; }
  [[nodiscard]] std::size_t session_person(std::size_t session) const { return session_person_.at(session); }

  PowerScale power{};

  [[nodiscard]] DensityValue log_density(std::span<const double> unconstrained,
                                         bool with_gradient = true) const;
  double log_density_gradient(std::span<const double> q, std::span<double> gradient) const override;

  /// Unconstrained -> named constrained values (same order as param_names()).
  [[nodiscard]] std::vector<double> constrain(std::span<const double> unconstrained) const;
  /// Inverse of constrain(); throws std::domain_error outside the support.
  [[nodiscard]] std::vector<double> unconstrain(std::span<const double> constrained) const;

  /// Hawkes parameters of one bound session from a constrained vector.
  [[nodiscard]] HawkesParams session_params(std::span<const double> constrained,
                                            std::size_t session) const;

  /// Constrained-vector index of the population branching factor (pooled
  /// alpha, partial mu_alpha); npos for unpooled and Poisson models.
  [[nodiscard]] std::size_t branching_index() const noexcept;
  /// Indices of the per-person alpha_n (unpooled, partial).
  [[nodiscard]] std::vector<std::size_t> person_alpha_indices() const;
  /// Indices of parameters that carry the power-scaled prior.
  [[nodiscard]] std::vector<std::size_t> prior_scaled_indices() const;
  /// Index range [first, last) of the per-person block of one parameter
  /// ("mu", "alpha" or "beta") in the constrained vector.
  [[nodiscard]] std::size_t person_block(std::string_view which) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend ModelSpec build_model(ModelKind kind, const Cohort& cohort, const PriorConfig& priors,
                               ProcessKind process);

 private:
  ModelSpec() = default;

  ModelKind kind_{ModelKind::pooled};
  ProcessKind process_{ProcessKind::hawkes};
  PriorConfig priors_{};
  std::vector<std::string> names_;
  std::vector<std::string> person_ids_;
  std::vector<Session> sessions_;
  std::vector<std::size_t> session_person_;
  std::vector<std::size_t> session_delta_;  // npos when the session has no events
  std::size_t n_delta_{0};

  // Offsets into the parameter vector; npos when absent.
  std::size_t hyper_{npos};  // partial: mu_mu, mu_alpha, mu_beta, sigma_mu, sigma_alpha, sigma_beta
  std::size_t mu_{npos};     // pooled: single entry; otherwise a block of N
  std::size_t alpha_{npos};
  std::size_t beta_{npos};
  std::size_t delta_{npos};
};

/// Layout sizes (Hawkes): pooled 3 + E, unpooled 3N + E, partial 6 + 3N + E,
/// where E counts sessions with at least one event.
[[nodiscard]] ModelSpec build_model(ModelKind kind, const Cohort& cohort,
                                    const PriorConfig& priors = {},
                                    ProcessKind process = ProcessKind::hawkes);

/// Per-draw population branching factor: pooled alpha, partial mu_alpha,
/// unpooled mean of alpha_n over persons.
[[nodiscard]] std::vector<double> population_branching_factor(const ModelSpec& spec,
                                                              const PosteriorDraws& draws);

}  // namespace hawkes
