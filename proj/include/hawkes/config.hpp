#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hawkes/diagnostics.hpp"
#include "hawkes/gof.hpp"
#include "hawkes/models.hpp"
#include "hawkes/nuts.hpp"
#include "hawkes/sensitivity.hpp"
#include "hawkes/simulate.hpp"

namespace hawkes {

struct BranchingConfig {
  std::size_t grid_points{512};
  double hdi_mass{0.8};
  std::size_t max_sessions{3};  // sessions with the most events get curves and forests
  std::size_t forest_draws{200};
};

struct RunConfig {
  std::vector<ModelKind> models{ModelKind::pooled, ModelKind::unpooled, ModelKind::partial};
  bool poisson_baselines{false};
  std::filesystem::path sessions_csv;
  std::filesystem::path events_csv;
  std::filesystem::path output_dir{"out"};
  std::uint64_t seed{1};
  CohortTemplate simulate{};
  SamplerConfig sampler{};
  PriorConfig priors{};
  PowerScale power{};
  ConvergenceGate gate{};
  GofOptions gof{};
  SensitivityOptions sensitivity{};
  BranchingConfig branching{};
  bool plots{true};

  /// Throws ValidationError on any inconsistent field.
  void validate() const;
};

/// Parses a JSON config; unknown keys anywhere are rejected. Relative data
/// and output paths resolve against `base_dir`.
[[nodiscard]] RunConfig parse_config(const std::string& text,
                                     const std::filesystem::path& base_dir = {});
[[nodiscard]] RunConfig load_config(const std::filesystem::path& file);

/// Canonical JSON of the effective configuration (sorted keys, no paths
/// made absolute beyond what was resolved at load time).
[[nodiscard]] std::string canonical_config(const RunConfig& config);

/// 64-bit FNV-1a of a byte string, as 16 lowercase hex digits.
[[nodiscard]] std::string fnv1a_hex(const std::string& bytes);

}  // namespace hawkes
