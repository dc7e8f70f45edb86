#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "hawkes/config.hpp"
#include "hawkes/models.hpp"
#include "hawkes/nuts.hpp"
#include "hawkes/psis.hpp"

namespace hawkes {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "1.0.0";

/// Reads the configured CSV pair; throws ValidationError when absent.
[[nodiscard]] Cohort load_cohort(const RunConfig& config);

/// One spec per configured model, plus Poisson baselines when enabled.
[[nodiscard]] std::vector<ModelSpec> build_models(const RunConfig& config, const Cohort& cohort);

/// Samples one model with the configured power scaling and seed.
[[nodiscard]] PosteriorDraws fit_model(const RunConfig& config, const ModelSpec& spec);

/// Loads persisted draws and checks they match the model layout.
[[nodiscard]] PosteriorDraws load_model_draws(const RunConfig& config, const ModelSpec& spec);
[[nodiscard]] std::filesystem::path draws_dir(const RunConfig& config);

struct GatedJson {
  Json json;
  bool gate_passed{true};
};

// Report sections; each carries a "stage" tag naming its source.
[[nodiscard]] GatedJson diagnostics_section(const RunConfig& config, const PosteriorDraws& draws);
[[nodiscard]] Json posterior_section(const ModelSpec& spec, const PosteriorDraws& draws, double hdi_mass);
[[nodiscard]] Json gof_section(const RunConfig& config, const ModelSpec& spec, const PosteriorDraws& draws);
[[nodiscard]] Json loo_section(const std::vector<LooResult>& results);
[[nodiscard]] Json sensitivity_section(const RunConfig& config, const ModelSpec& spec, const PosteriorDraws& draws);
[[nodiscard]] Json branching_section(const RunConfig& config, const ModelSpec& spec, const PosteriorDraws& draws);
[[nodiscard]] Json welch_section(const std::vector<ModelSpec>& specs, const std::vector<PosteriorDraws>& draws);
[[nodiscard]] Json provenance(const RunConfig& config);

struct PipelineResult {
  Json report;
  bool gate_passed{true};
};

/// Fit (or reuse persisted draws) -> diagnostics gate -> GOF -> LOO and
/// stacking -> sensitivity -> branching -> report. Writes draws, report.json
/// and plots under the output directory. A failed gate marks every
/// downstream section unreliable.
[[nodiscard]] PipelineResult run_pipeline(const RunConfig& config, bool reuse_draws = false);

/// Writes pretty-printed JSON with a trailing newline.
void write_json(const Json& j, const std::filesystem::path& file);

}  // namespace hawkes
