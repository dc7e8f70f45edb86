#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hawkes/models.hpp"
#include "hawkes/nuts.hpp"

namespace hawkes {

enum class Component { prior, likelihood };

enum class Diagnosis { robust, prior_data_conflict, strong_prior_weak_likelihood };

[[nodiscard]] std::string_view to_string(Component c) noexcept;
[[nodiscard]] std::string_view to_string(Diagnosis d) noexcept;

struct ImportanceWeights {
  std::vector<double> weights;  // sum to 1
  double k_hat{0.0};
  bool reliable{true};  // k_hat <= 0.7
};

/// Pareto-smoothed power-scaling weights proportional to exp((delta - 1) * log_component).
[[nodiscard]] ImportanceWeights power_scale_weights(std::span<const double> log_component, double delta);
[[nodiscard]] ImportanceWeights power_scale_weights(const PosteriorDraws& draws, Component component,
                                                    double delta);

/// Symmetrized cumulative Jensen-Shannon distance between the ECDFs of two
/// weighted samples, divided by the width of their pooled support. Empty
/// weights mean equal weights.
[[nodiscard]] double cjs_distance(std::span<const double> x, std::span<const double> x_weights,
                                  std::span<const double> y, std::span<const double> y_weights);

/// Distance between the reweighted and the unweighted ECDF of one sample.
[[nodiscard]] double cjs_distance(std::span<const double> draws, std::span<const double> weights);

[[nodiscard]] Diagnosis diagnose(double prior_distance, double likelihood_distance, double tau = 0.05);

struct SensitivityOptions {
  std::vector<double> deltas{0.5, 0.8, 1.25, 2.0};
  double tau{0.05};
};

struct WeightCheck {
  Component component{Component::prior};
  double delta{1.0};
  double k_hat{0.0};
  bool reliable{true};
};

struct ParamSensitivity {
  std::string name;
  double prior{0.0};       // max distance over the delta grid
  double likelihood{0.0};  // max distance over the delta grid
  Diagnosis diagnosis{Diagnosis::robust};
};

struct PowerScaleResult {
  std::string model;
  double tau{0.05};
  std::vector<double> deltas;
  std::vector<ParamSensitivity> params;
  std::vector<WeightCheck> weights;
  [[nodiscard]] bool reliable() const;
};

/// Prior and likelihood power-scaling of every prior-scaled parameter plus
/// the population branching factor.
[[nodiscard]] PowerScaleResult power_scale_sensitivity(const ModelSpec& spec, const PosteriorDraws& draws,
                                                       const SensitivityOptions& options = {});

struct SweepRow {
  double delta{1.0};
  double mean{0.0};
  double sd{0.0};
  double q05{0.0};
  double q95{0.0};
  double k_hat{0.0};
  bool reliable{true};
};

/// Self-normalized weighted quantile.
[[nodiscard]] double weighted_quantile(std::span<const double> x, std::span<const double> weights,
                                       double prob);

/// Population branching factor summaries after power-scaling only its prior.
[[nodiscard]] std::vector<SweepRow> branching_prior_sweep(const ModelSpec& spec,
                                                          const PosteriorDraws& draws,
                                                          std::span<const double> deltas);

}  // namespace hawkes
