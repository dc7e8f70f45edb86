#pragma once

#include <cstddef>
#include <span>

namespace hawkes {

/// Differentiable log-density over an unconstrained vector. Implementations
/// must be re-entrant: the sampler calls them from several chains at once.
class LogDensityTarget {
 public:
  virtual ~LogDensityTarget() = default;
  [[nodiscard]] virtual std::size_t dimension() const = 0;
  /// Returns the log-density (or -inf / NaN outside the support) and writes
  /// its gradient into `gradient`.
  virtual double log_density_gradient(std::span<const double> q, std::span<double> gradient) const = 0;
};

}  // namespace hawkes
