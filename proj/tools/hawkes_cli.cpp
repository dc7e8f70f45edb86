#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "hawkes/io.hpp"
#include "hawkes/pipeline.hpp"
#include "hawkes/sensitivity.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/svg.hpp"

using namespace hawkes;

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 2;
constexpr int kGate = 3;

struct Overrides {
  std::string config;
  std::string model;
  std::optional<std::uint64_t> seed;
  std::string out;
  bool from_draws{false};
};

RunConfig effective_config(const Overrides& o) {
  RunConfig cfg = load_config(o.config);
  if (!o.model.empty()) {
    try {
      cfg.models = {parse_model_kind(o.model)};
    } catch (const std::invalid_argument& e) {
      throw ValidationError(std::string("--model: ") + e.what());
    }
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out.empty()) cfg.output_dir = o.out;
  cfg.validate();
  std::filesystem::create_directories(cfg.output_dir);
  return cfg;
}

struct Fitted {
  std::vector<ModelSpec> specs;
  std::vector<PosteriorDraws> draws;
};

Fitted stored(const RunConfig& cfg) {
  Fitted f;
  f.specs = build_models(cfg, load_cohort(cfg));
  for (const auto& spec : f.specs) f.draws.push_back(load_model_draws(cfg, spec));
  return f;
}

int cmd_simulate(const RunConfig& cfg) {
  const SimulatedCohort sim = simulate_cohort(cfg.simulate, cfg.seed);
  write_cohort(sim.cohort, cfg.output_dir / "sessions.csv", cfg.output_dir / "events.csv");
  Json truth;
  truth["stage"] = "simulate";
  truth["seed"] = cfg.seed;
  truth["hyper"] = {{"mu_mu", sim.hyper.mu_mu},         {"mu_alpha", sim.hyper.mu_alpha},
                    {"mu_beta", sim.hyper.mu_beta},     {"sigma_mu", sim.hyper.sigma_mu},
                    {"sigma_alpha", sim.hyper.sigma_alpha}, {"sigma_beta", sim.hyper.sigma_beta}};
  Json persons = Json::array();
  for (std::size_t n = 0; n < sim.truth.size(); ++n) {
    persons.push_back({{"person_id", sim.cohort.persons[n].id},
                       {"mu", sim.truth[n].mu},
                       {"alpha", sim.truth[n].alpha},
                       {"beta", sim.truth[n].beta},
                       {"delta_mu", sim.truth[n].delta_mu}});
  }
  truth["persons"] = persons;
  write_json(truth, cfg.output_dir / "truth.json");
  std::cout << "simulated " << sim.cohort.persons.size() << " persons, " << sim.cohort.session_count()
            << " sessions, " << sim.cohort.event_count() << " events into " << cfg.output_dir.string() << '\n';
  return kOk;
}

int cmd_fit(const RunConfig& cfg) {
  const std::vector<ModelSpec> specs = build_models(cfg, load_cohort(cfg));
  Json out;
  out["provenance"] = provenance(cfg);
  Json models = Json::array();
  bool passed = true;
  for (const auto& spec : specs) {
    const PosteriorDraws d = fit_model(cfg, spec);
    write_draws(d, draws_dir(cfg));
    GatedJson diag = diagnostics_section(cfg, d);
    passed = passed && diag.gate_passed;
    models.push_back({{"model", spec.label()}, {"diagnostics", std::move(diag.json)}});
    std::cout << spec.label() << ": " << (diag.gate_passed ? "gate passed" : "gate FAILED") << '\n';
  }
  out["models"] = models;
  write_json(out, cfg.output_dir / "fit.json");
  return passed ? kOk : kGate;
}

int cmd_diagnose(const RunConfig& cfg) {
  const Fitted f = stored(cfg);
  Json out;
  out["provenance"] = provenance(cfg);
  Json models = Json::array();
  bool passed = true;
  for (std::size_t k = 0; k < f.specs.size(); ++k) {
    GatedJson diag = diagnostics_section(cfg, f.draws[k]);
    passed = passed && diag.gate_passed;
    for (const auto& failure : diag.json["gate"]["failures"]) {
      std::cout << f.specs[k].label() << ": " << failure.get<std::string>() << '\n';
    }
    models.push_back({{"model", f.specs[k].label()}, {"diagnostics", std::move(diag.json)}});
  }
  out["models"] = models;
  write_json(out, cfg.output_dir / "diagnostics.json");
  std::cout << (passed ? "convergence gate passed" : "convergence gate FAILED") << '\n';
  return passed ? kOk : kGate;
}

template <class Section>
int per_model(const RunConfig& cfg, const std::string& file, Section section) {
  const Fitted f = stored(cfg);
  Json out;
  out["provenance"] = provenance(cfg);
  Json models = Json::array();
  for (std::size_t k = 0; k < f.specs.size(); ++k) {
    const bool reliable = diagnostics_section(cfg, f.draws[k]).gate_passed;
    Json m{{"model", f.specs[k].label()}, {"reliable", reliable}};
    m["result"] = section(f.specs[k], f.draws[k]);
    models.push_back(std::move(m));
  }
  out["models"] = models;
  write_json(out, cfg.output_dir / file);
  std::cout << "wrote " << (cfg.output_dir / file).string() << '\n';
  return kOk;
}

int cmd_loo(const RunConfig& cfg) {
  const Fitted f = stored(cfg);
  std::vector<LooResult> results;
  for (const auto& d : f.draws) results.push_back(psis_loo(d));
  Json out;
  out["provenance"] = provenance(cfg);
  out["loo"] = loo_section(results);
  write_json(out, cfg.output_dir / "loo.json");
  for (const auto& row : out["loo"]["compare"]) {
    std::cout << row["model"].get<std::string>() << "  elpd_diff=" << row["elpd_diff"].dump()
              << "  weight=" << row["weight"].dump() << '\n';
  }
  return kOk;
}

int cmd_report(const RunConfig& cfg, bool from_draws) {
  const PipelineResult r = run_pipeline(cfg, from_draws);
  std::cout << "wrote " << (cfg.output_dir / "report.json").string() << " (config hash "
            << r.report["provenance"]["config_hash"].get<std::string>() << ")\n";
  if (!r.gate_passed) std::cout << "convergence gate FAILED: results are flagged unreliable\n";
  return r.gate_passed ? kOk : kGate;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian edge-corrected Hawkes process toolkit"};
  app.require_subcommand(1);
  Overrides o;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"simulate", "simulate a synthetic cohort into sessions.csv / events.csv"},
      {"fit", "sample every configured model and persist the draws"},
      {"diagnose", "convergence diagnostics and gate on stored draws"},
      {"gof", "random-time-change goodness-of-fit tests"},
      {"loo", "PSIS-LOO, model comparison and stacking weights"},
      {"sensitivity", "prior and likelihood power-scaling sensitivity"},
      {"branching", "trigger probabilities, forests and exogenous-probability curves"},
      {"report", "run the whole pipeline and write report.json and plots"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--model", o.model, "restrict to one model: partial | unpooled | pooled");
    sub->add_option("--seed", o.seed, "override the configured seed");
    sub->add_option("--out", o.out, "override the output directory");
    if (name == "report") sub->add_flag("--from-draws", o.from_draws, "reuse persisted draws instead of fitting");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kValidation;
  }

  try {
    const std::string cmd = app.get_subcommands().front()->get_name();
    const RunConfig cfg = effective_config(o);
    if (cmd == "simulate") return cmd_simulate(cfg);
    if (cmd == "fit") return cmd_fit(cfg);
    if (cmd == "diagnose") return cmd_diagnose(cfg);
    if (cmd == "gof") {
      return per_model(cfg, "gof.json",
                       [&](const ModelSpec& s, const PosteriorDraws& d) { return gof_section(cfg, s, d); });
    }
    if (cmd == "loo") return cmd_loo(cfg);
    if (cmd == "sensitivity") {
      return per_model(cfg, "sensitivity.json",
                       [&](const ModelSpec& s, const PosteriorDraws& d) { return sensitivity_section(cfg, s, d); });
    }
    if (cmd == "branching") {
      return per_model(cfg, "branching.json",
                       [&](const ModelSpec& s, const PosteriorDraws& d) { return branching_section(cfg, s, d); });
    }
    return cmd_report(cfg, o.from_draws);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGate;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
