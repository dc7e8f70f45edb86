#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hawkes/branching.hpp"
#include "hawkes/sensitivity.hpp"
#include "hawkes/session.hpp"

namespace hawkes {

struct DensityCurve {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Gaussian kernel density estimate with Silverman's bandwidth on a grid
/// extending four bandwidths past the sample range.
[[nodiscard]] DensityCurve kernel_density(std::span<const double> draws, std::size_t points = 256,
                                          std::string label = {});

/// Overlaid posterior densities, one path per curve.
[[nodiscard]] std::string density_svg(const std::vector<DensityCurve>& curves, const std::string& title,
                                      const std::string& x_label);

struct SweepSeries {
  std::string label;
  std::vector<SweepRow> rows;
};

/// One horizontal interval line (90% interval) with a mean marker per delta
/// and model.
[[nodiscard]] std::string sweep_svg(const std::vector<SweepSeries>& series, const std::string& title);

/// Event markers, sampled parent arcs and the exogenous-probability band.
[[nodiscard]] std::string branching_svg(const Session& session, const BranchingForest& forest,
                                        const ExogenousCurve& curve, const std::string& title);

}  // namespace hawkes
