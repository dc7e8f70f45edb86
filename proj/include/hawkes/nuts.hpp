#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hawkes/models.hpp"
#include "hawkes/target.hpp"

namespace hawkes {

struct SamplerConfig {
  std::size_t chains{4};
  std::size_t warmup{1000};
  std::size_t draws{1000};
  double target_accept{0.95};
  int max_depth{10};
  std::uint64_t seed{0};
  double max_divergent_fraction{0.25};
  double init_radius{2.0};  // unconstrained inits ~ Uniform(-r, r)

  void validate() const;
};

/// Thrown when the share of divergent post-warmup transitions exceeds the
/// configured limit.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t divergent, std::size_t total)
      : std::runtime_error(what), divergent(divergent), total(total) {}
  std::size_t divergent;
  std::size_t total;
};

/// Raw sampler output on the unconstrained scale. Arrays are chain-major:
/// entry (c, d) lives at c * draws + d.
struct NutsOutput {
  std::size_t chains{0};
  std::size_t draws{0};
  std::size_t dim{0};
  std::vector<double> positions;  // (c, d, k) at (c * draws + d) * dim + k
  std::vector<double> log_density;
  std::vector<std::uint8_t> divergent;
  std::vector<int> tree_depth;
  std::vector<int> n_leapfrog;
  std::vector<double> energy;
  std::vector<double> accept_stat;
  std::vector<double> step_size;   // per chain, after adaptation
  std::vector<double> inv_metric;  // per chain, dim entries each
  std::size_t warmup_divergent{0};

  [[nodiscard]] std::span<const double> position(std::size_t chain, std::size_t draw) const {
    return {positions.data() + (chain * draws + draw) * dim, dim};
  }
  [[nodiscard]] std::size_t divergent_count() const;
};

[[nodiscard]] NutsOutput run_nuts(const LogDensityTarget& target, const SamplerConfig& cfg);

/// One leapfrog step with a diagonal inverse metric; `gradient` holds the
/// gradient of the log-density at q on entry and is updated on exit.
/// Returns the log-density at the new position.
double leapfrog(const LogDensityTarget& target, std::span<double> q, std::span<double> p,
                std::span<double> gradient, std::span<const double> inv_metric, double step);

struct PosteriorDraws {
  std::string model;
  std::size_t chains{0};
  std::size_t draws{0};
  std::vector<std::string> names;
  std::vector<double> values;  // constrained, (c * draws + d) * names.size() + k
  std::vector<double> log_prior;
  std::vector<double> log_prior_branching;
  std::vector<double> log_likelihood;
  std::size_t sessions{0};
  std::vector<double> session_loglik;  // (c * draws + d) * sessions + s
  std::vector<std::uint8_t> divergent;
  std::vector<int> tree_depth;
  std::vector<double> energy;
  std::vector<double> accept_stat;
  std::vector<double> step_size;

  [[nodiscard]] std::size_t total() const noexcept { return chains * draws; }
  [[nodiscard]] std::size_t dim() const noexcept { return names.size(); }
  [[nodiscard]] std::size_t index_of(std::string_view name) const;
  [[nodiscard]] std::span<const double> row(std::size_t draw) const {
    return {values.data() + draw * dim(), dim()};
  }
  /// All draws of one parameter in chain-major order.
  [[nodiscard]] std::vector<double> column(std::size_t k) const;
  [[nodiscard]] std::vector<std::vector<double>> by_chain(std::size_t k) const;
  [[nodiscard]] std::span<const double> session_row(std::size_t draw) const {
    return {session_loglik.data() + draw * sessions, sessions};
  }
  [[nodiscard]] std::size_t divergent_count() const;
  /// Largest |sum of session log-liks - stored total| over all draws.
  [[nodiscard]] double max_loglik_mismatch() const;
};

/// Samples the model posterior and records per-draw prior and likelihood
/// terms. Throws DivergenceError above the divergence limit.
[[nodiscard]] PosteriorDraws sample(const ModelSpec& spec, const SamplerConfig& cfg);

/// Wraps raw output as constrained draws for `spec`.
[[nodiscard]] PosteriorDraws to_posterior(const ModelSpec& spec, const NutsOutput& raw);

struct WelchResult {
  double t{0.0};
  double df{0.0};
  double p_value{1.0};
};

[[nodiscard]] WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace hawkes
