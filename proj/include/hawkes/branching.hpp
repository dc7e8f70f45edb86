#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hawkes/models.hpp"
#include "hawkes/nuts.hpp"
#include "hawkes/session.hpp"

namespace hawkes {

/// Posterior source probabilities of each event: baseline, edge stream, or
/// one of the strictly earlier events. p_parent[i] has exactly i entries.
struct TriggerProbMatrix {
  std::vector<double> p_exo;
  std::vector<double> p_edge;
  std::vector<std::vector<double>> p_parent;

  [[nodiscard]] std::size_t size() const noexcept { return p_exo.size(); }
  [[nodiscard]] double row_sum(std::size_t i) const;
};

[[nodiscard]] TriggerProbMatrix trigger_probabilities(const HawkesParams& params, const Session& session);

using BranchingForest = std::vector<ParentLabel>;

/// Draws every event's parent from its row; deterministic per (seed, stream).
[[nodiscard]] BranchingForest sample_forest(const TriggerProbMatrix& probs, std::uint64_t seed,
                                            std::uint64_t stream = 0);

/// Share of events whose sampled parent equals the true one.
[[nodiscard]] double parent_recovery(const BranchingForest& sampled, const BranchingForest& truth);

/// Expected accuracy of guessing uniformly among exp(H_i) effective
/// choices, averaged over rows: mean of exp(-H_i).
[[nodiscard]] double chance_recovery(const TriggerProbMatrix& probs);

/// a / (1 - a); +inf for a >= 1.
[[nodiscard]] double expected_descendants(double branching_factor);

struct DescendantsSummary {
  std::vector<double> values;  // +inf for supercritical draws
  double mean{0.0};
  double sd{0.0};
  std::size_t supercritical{0};
};

/// Per-draw cascade sizes; supercritical draws are excluded from mean and sd.
[[nodiscard]] DescendantsSummary expected_descendants(std::span<const double> branching_draws);

struct ExogenousCurve {
  std::size_t session{0};
  double hdi_mass{0.8};
  std::vector<double> grid;
  std::vector<double> median;
  std::vector<double> lower;
  std::vector<double> upper;
};

/// n equally spaced points covering [0, duration].
[[nodiscard]] std::vector<double> uniform_grid(double duration, std::size_t points = 512);

/// Median and HDI over draws of mu / lambda(t) at each grid time.
[[nodiscard]] ExogenousCurve exogenous_probability_curve(const ModelSpec& spec, const PosteriorDraws& draws,
                                                         std::size_t session, std::span<const double> grid,
                                                         double hdi_mass = 0.8);

/// mu / lambda(t) for one parameter set at sorted grid times.
[[nodiscard]] std::vector<double> exogenous_probability(const HawkesParams& params, const Session& session,
                                                        std::span<const double> grid);

}  // namespace hawkes
