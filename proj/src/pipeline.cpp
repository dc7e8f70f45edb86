#include "hawkes/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "hawkes/branching.hpp"
#include "hawkes/diagnostics.hpp"
#include "hawkes/gof.hpp"
#include "hawkes/io.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/sensitivity.hpp"
#include "hawkes/stats.hpp"
#include "hawkes/svg.hpp"

namespace hawkes {
namespace {

Json test_json(const TestResult& t) {
  Json j;
  j["statistic"] = t.statistic;
  j["p_value"] = t.p_value;
  j["n"] = t.n_used;
  j["skipped"] = t.skipped;
  if (t.skipped) j["reason"] = t.reason;
  return j;
}

Json label_json(const ParentLabel& l) {
  switch (l.kind) {
    case ParentLabel::Kind::exogenous:
      return "exogenous";
    case ParentLabel::Kind::edge:
      return "edge";
    case ParentLabel::Kind::event:
      return l.index;
  }
  return nullptr;
}

std::vector<std::size_t> busiest_sessions(const ModelSpec& spec, std::size_t count) {
  std::vector<std::size_t> order(spec.session_count());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.sessions()[a].size() > spec.sessions()[b].size();
  });
  std::vector<std::size_t> out;
  for (std::size_t s : order) {
    if (out.size() >= count || spec.sessions()[s].empty()) break;
    out.push_back(s);
  }
  return out;
}

std::size_t draw_stride(std::size_t total, std::size_t wanted) {
  return std::max<std::size_t>(1, total / std::max<std::size_t>(1, wanted));
}

}  // namespace

Cohort load_cohort(const RunConfig& config) {
  if (config.sessions_csv.empty()) {
    throw ValidationError("config has no data.sessions / data.events; run `simulate` or set the data paths");
  }
  return ingest(config.sessions_csv, config.events_csv);
}

std::vector<ModelSpec> build_models(const RunConfig& config, const Cohort& cohort) {
  std::vector<ModelSpec> specs;
  for (ProcessKind process : {ProcessKind::hawkes, ProcessKind::poisson}) {
    if (process == ProcessKind::poisson && !config.poisson_baselines) continue;
    for (ModelKind kind : config.models) {
      try {
        specs.push_back(build_model(kind, cohort, config.priors, process));
      } catch (const ValidationError&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
      }
      specs.back().power = config.power;
    }
  }
  return specs;
}

PosteriorDraws fit_model(const RunConfig& config, const ModelSpec& spec) {
  SamplerConfig s = config.sampler;
  s.seed = mix64(config.seed ^ stream_id("fit/" + spec.label()));
  return sample(spec, s);
}

std::filesystem::path draws_dir(const RunConfig& config) { return config.output_dir / "draws"; }

PosteriorDraws load_model_draws(const RunConfig& config, const ModelSpec& spec) {
  PosteriorDraws d = read_draws(draws_dir(config), spec.label());
  if (d.names != spec.param_names() || d.sessions != spec.session_count()) {
    throw ValidationError("stored draws for '" + spec.label() + "' do not match the configured data");
  }
  return d;
}

GatedJson diagnostics_section(const RunConfig& config, const PosteriorDraws& draws) {
  const Diagnostics diag = diagnostics(draws);
  const GateResult gate = check_gate(diag, config.gate);
  GatedJson out;
  out.gate_passed = gate.passed;
  Json& j = out.json;
  j["stage"] = "diagnostics";
  j["gate"] = {{"passed", gate.passed},
               {"max_rhat", config.gate.max_rhat},
               {"min_ess", config.gate.min_ess},
               {"max_divergent", config.gate.max_divergent},
               {"failures", gate.failures}};
  j["chains"] = draws.chains;
  j["draws_per_chain"] = draws.draws;
  j["divergent"] = diag.divergent;
  j["step_size"] = draws.step_size;
  Json params = Json::array();
  for (const auto& p : diag.params) {
    params.push_back({{"name", p.name},
                      {"mean", p.mean},
                      {"sd", p.sd},
                      {"q05", p.q05},
                      {"median", p.median},
                      {"q95", p.q95},
                      {"mcse_mean", p.mcse_mean},
                      {"mcse_sd", p.mcse_sd},
                      {"ess_bulk", p.ess_bulk},
                      {"ess_tail", p.ess_tail},
                      {"rhat", p.rhat}});
  }
  j["params"] = params;
  return out;
}

Json posterior_section(const ModelSpec& spec, const PosteriorDraws& draws, double hdi_mass) {
  Json j;
  j["stage"] = "posterior";
  if (spec.process() != ProcessKind::hawkes) {
    j["branching_factor"] = nullptr;
    return j;
  }
  const std::vector<double> bf = population_branching_factor(spec, draws);
  const auto [lo, hi] = stats::hdi(bf, hdi_mass);
  const DescendantsSummary desc = expected_descendants(bf);
  j["branching_factor"] = {{"mean", stats::mean(bf)},
                           {"sd", stats::sd(bf)},
                           {"q05", stats::quantile(bf, 0.05)},
                           {"median", stats::quantile(bf, 0.5)},
                           {"q95", stats::quantile(bf, 0.95)},
                           {"hdi_mass", hdi_mass},
                           {"hdi", {lo, hi}}};
  j["expected_descendants"] = {{"mean", desc.mean}, {"sd", desc.sd}, {"supercritical", desc.supercritical}};
  return j;
}

Json gof_section(const RunConfig& config, const ModelSpec& spec, const PosteriorDraws& draws) {
  const GofReport rep = goodness_of_fit(spec, draws, config.gof);
  Json j;
  j["stage"] = "gof";
  j["plug_in"] = "posterior mean";
  j["levels"] = rep.levels;
  j["tested_sessions"] = rep.tested_sessions;
  j["tested_persons"] = rep.tested_persons;
  j["session_non_rejection"] = rep.session_non_rejection;
  j["person_non_rejection"] = rep.person_non_rejection;
  Json persons = Json::array();
  for (const auto& p : rep.persons) {
    persons.push_back({{"person_id", p.person_id},
                       {"tested_sessions", p.tested_sessions},
                       {"non_rejection", p.non_rejection},
                       {"ks_exponential", test_json(p.ks_exponential)},
                       {"ljung_box", test_json(p.ljung_box)}});
  }
  j["persons"] = persons;
  Json sessions = Json::array();
  for (const auto& s : rep.sessions) {
    sessions.push_back({{"person_id", s.person_id},
                        {"session_id", s.session_id},
                        {"events", s.events},
                        {"lewis_durbin", test_json(s.lewis)}});
  }
  j["sessions"] = sessions;
  const std::vector<std::size_t> busiest = busiest_sessions(spec, 1);
  if (!busiest.empty() && draws.total() >= 100) {
    const PpcResult ppc = ppc_lewis(spec, draws, busiest.front(), config.gof.min_events);
    Json pj{{"session", busiest.front()}, {"skipped", ppc.skipped}};
    if (!ppc.skipped) {
      const double share = static_cast<double>(std::count_if(ppc.p_values.begin(), ppc.p_values.end(),
                                                             [&](double p) { return p > config.gof.levels.front(); })) /
                           static_cast<double>(ppc.p_values.size());
      pj["median_p_value"] = stats::quantile(ppc.p_values, 0.5);
      pj["non_rejection"] = share;
    }
    j["ppc_lewis"] = pj;
  }
  return j;
}

Json loo_section(const std::vector<LooResult>& results) {
  Json j;
  j["stage"] = "loo";
  j["unit"] = "session";
  Json models = Json::array();
  for (const auto& r : results) {
    models.push_back({{"model", r.model},
                      {"elpd", r.elpd},
                      {"se", r.se},
                      {"p_loo", r.p_loo},
                      {"lppd", r.lppd},
                      {"high_k", r.high_k},
                      {"max_k_hat", r.k_hat.empty() ? 0.0 : *std::max_element(r.k_hat.begin(), r.k_hat.end())}});
  }
  j["models"] = models;
  Json rows = Json::array();
  for (const auto& c : compare(results)) {
    rows.push_back({{"model", c.model},
                    {"rank", c.rank},
                    {"elpd", c.elpd},
                    {"p_loo", c.p_loo},
                    {"elpd_diff", c.elpd_diff},
                    {"weight", c.weight},
                    {"se", c.se},
                    {"dse", c.dse},
                    {"high_k", c.high_k}});
  }
  j["compare"] = rows;
  return j;
}

Json sensitivity_section(const RunConfig& config, const ModelSpec& spec, const PosteriorDraws& draws) {
  const PowerScaleResult res = power_scale_sensitivity(spec, draws, config.sensitivity);
  Json j;
  j["stage"] = "sensitivity";
  j["deltas"] = res.deltas;
  j["tau"] = res.tau;
  j["weights_reliable"] = res.reliable();
  Json weights = Json::array();
  for (const auto& w : res.weights) {
    weights.push_back({{"component", std::string(to_string(w.component))},
                       {"delta", w.delta},
                       {"k_hat", w.k_hat},
                       {"reliable", w.reliable}});
  }
  j["weights"] = weights;
  Json params = Json::array();
  for (const auto& p : res.params) {
    params.push_back({{"name", p.name},
                      {"prior", p.prior},
                      {"likelihood", p.likelihood},
                      {"diagnosis", std::string(to_string(p.diagnosis))}});
  }
  j["params"] = params;
  if (spec.process() == ProcessKind::hawkes) {
    std::vector<double> grid = config.sensitivity.deltas;
    if (std::find(grid.begin(), grid.end(), 1.0) == grid.end()) grid.push_back(1.0);
    std::sort(grid.begin(), grid.end());
    Json sweep = Json::array();
    for (const auto& r : branching_prior_sweep(spec, draws, grid)) {
      sweep.push_back({{"delta", r.delta},
                       {"mean", r.mean},
                       {"sd", r.sd},
                       {"q05", r.q05},
                       {"q95", r.q95},
                       {"k_hat", r.k_hat},
                       {"reliable", r.reliable}});
    }
    j["branching_prior_sweep"] = sweep;
  }
  return j;
}

Json branching_section(const RunConfig& config, const ModelSpec& spec, const PosteriorDraws& draws) {
  Json j;
  j["stage"] = "branching";
  if (spec.process() != ProcessKind::hawkes) {
    j["sessions"] = Json::array();
    return j;
  }
  const std::vector<double> theta = posterior_mean(draws);
  double exo = 0.0;
  double edge = 0.0;
  std::size_t events = 0;
  for (std::size_t s = 0; s < spec.session_count(); ++s) {
    if (spec.sessions()[s].empty()) continue;
    const TriggerProbMatrix m = trigger_probabilities(spec.session_params(theta, s), spec.sessions()[s]);
    for (std::size_t i = 0; i < m.size(); ++i) {
      exo += m.p_exo[i];
      edge += m.p_edge[i];
    }
    events += m.size();
  }
  j["plug_in"] = "posterior mean";
  j["exogenous_share"] = events > 0 ? exo / static_cast<double>(events) : 0.0;
  j["edge_share"] = events > 0 ? edge / static_cast<double>(events) : 0.0;

  const std::uint64_t forest_base = stream_id("forest");
  Json sessions = Json::array();
  for (std::size_t s : busiest_sessions(spec, config.branching.max_sessions)) {
    const Session& sess = spec.sessions()[s];
    const std::size_t n = sess.size();
    std::vector<double> p_exo(n, 0.0), p_edge(n, 0.0);
    std::size_t used = 0;
    const std::size_t stride = draw_stride(draws.total(), config.branching.forest_draws);
    for (std::size_t m = 0; m < draws.total() && used < config.branching.forest_draws; m += stride, ++used) {
      const TriggerProbMatrix probs = trigger_probabilities(spec.session_params(draws.row(m), s), sess);
      const BranchingForest f = sample_forest(probs, config.seed, stream_id(forest_base, s, m));
      for (std::size_t i = 0; i < n; ++i) {
        p_exo[i] += f[i].kind == ParentLabel::Kind::exogenous ? 1.0 : 0.0;
        p_edge[i] += f[i].kind == ParentLabel::Kind::edge ? 1.0 : 0.0;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      p_exo[i] /= static_cast<double>(used);
      p_edge[i] /= static_cast<double>(used);
    }
    const TriggerProbMatrix plug = trigger_probabilities(spec.session_params(theta, s), sess);
    const BranchingForest forest = sample_forest(plug, config.seed, stream_id(forest_base, s));
    Json forest_json = Json::array();
    for (const auto& l : forest) forest_json.push_back(label_json(l));
    const std::vector<double> grid = uniform_grid(sess.duration, config.branching.grid_points);
    const ExogenousCurve curve = exogenous_probability_curve(spec, draws, s, grid, config.branching.hdi_mass);
    sessions.push_back({{"session", s},
                        {"person_id", sess.person_id},
                        {"session_id", sess.session_id},
                        {"duration", sess.duration},
                        {"times", sess.times},
                        {"forest_draws", used},
                        {"posterior_exogenous", p_exo},
                        {"posterior_edge", p_edge},
                        {"forest", forest_json},
                        {"curve",
                         {{"hdi_mass", curve.hdi_mass},
                          {"grid", curve.grid},
                          {"median", curve.median},
                          {"lower", curve.lower},
                          {"upper", curve.upper}}}});
  }
  j["sessions"] = sessions;
  return j;
}

Json welch_section(const std::vector<ModelSpec>& specs, const std::vector<PosteriorDraws>& draws) {
  Json j = Json::array();
  for (std::size_t a = 0; a < specs.size(); ++a) {
    if (specs[a].process() != ProcessKind::hawkes) continue;
    for (std::size_t b = a + 1; b < specs.size(); ++b) {
      if (specs[b].process() != ProcessKind::hawkes) continue;
      const std::vector<double> xa = population_branching_factor(specs[a], draws[a]);
      const std::vector<double> xb = population_branching_factor(specs[b], draws[b]);
      const WelchResult w = welch_t_test(xa, xb);
      j.push_back({{"stage", "posterior"},
                   {"a", specs[a].label()},
                   {"b", specs[b].label()},
                   {"mean_a", stats::mean(xa)},
                   {"mean_b", stats::mean(xb)},
                   {"t", w.t},
                   {"df", w.df},
                   {"p_value", w.p_value}});
    }
  }
  return j;
}

Json provenance(const RunConfig& config) {
  return {{"stage", "config"},
          {"seed", config.seed},
          {"config_hash", fnv1a_hex(canonical_config(config))},
          {"version", kVersion}};
}

void write_json(const Json& j, const std::filesystem::path& file) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

PipelineResult run_pipeline(const RunConfig& config, bool reuse_draws) {
  config.validate();
  const Cohort cohort = load_cohort(config);
  const std::vector<ModelSpec> specs = build_models(config, cohort);
  std::vector<PosteriorDraws> draws;
  for (const auto& spec : specs) {
    if (reuse_draws) {
      draws.push_back(load_model_draws(config, spec));
    } else {
      draws.push_back(fit_model(config, spec));
      write_draws(draws.back(), draws_dir(config));
    }
  }

  PipelineResult out;
  Json& r = out.report;
  r["provenance"] = provenance(config);
  r["data"] = {{"stage", "ingest"},
               {"persons", cohort.persons.size()},
               {"sessions", cohort.session_count()},
               {"events", cohort.event_count()}};
  Json models = Json::array();
  std::vector<LooResult> loo;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    GatedJson diag = diagnostics_section(config, draws[k]);
    out.gate_passed = out.gate_passed && diag.gate_passed;
    Json m;
    m["model"] = specs[k].label();
    m["reliable"] = diag.gate_passed;
    m["diagnostics"] = std::move(diag.json);
    m["posterior"] = posterior_section(specs[k], draws[k], config.branching.hdi_mass);
    m["gof"] = gof_section(config, specs[k], draws[k]);
    m["sensitivity"] = sensitivity_section(config, specs[k], draws[k]);
    m["branching"] = branching_section(config, specs[k], draws[k]);
    models.push_back(std::move(m));
    loo.push_back(psis_loo(draws[k]));
  }
  r["reliable"] = out.gate_passed;
  r["models"] = models;
  r["loo"] = loo_section(loo);
  r["loo"]["reliable"] = out.gate_passed;
  r["branching_factor_tests"] = welch_section(specs, draws);
  write_json(r, config.output_dir / "report.json");

  if (config.plots) {
    std::filesystem::create_directories(config.output_dir / "plots");
    std::vector<DensityCurve> curves;
    std::vector<SweepSeries> sweeps;
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (specs[k].process() != ProcessKind::hawkes) continue;
      curves.push_back(kernel_density(population_branching_factor(specs[k], draws[k]), 256, specs[k].label()));
      SweepSeries s;
      s.label = specs[k].label();
      for (const auto& row : models[k]["sensitivity"]["branching_prior_sweep"]) {
        SweepRow sr;
        sr.delta = row["delta"].get<double>();
        sr.mean = row["mean"].get<double>();
        sr.sd = row["sd"].get<double>();
        sr.q05 = row["q05"].get<double>();
        sr.q95 = row["q95"].get<double>();
        sr.reliable = row["reliable"].get<bool>();
        s.rows.push_back(sr);
      }
      sweeps.push_back(std::move(s));
      for (const auto& sess : models[k]["branching"]["sessions"]) {
        const std::size_t idx = sess["session"].get<std::size_t>();
        const Session& session = specs[k].sessions()[idx];
        BranchingForest forest;
        for (const auto& l : sess["forest"]) {
          if (l.is_string()) {
            forest.push_back({l == "edge" ? ParentLabel::Kind::edge : ParentLabel::Kind::exogenous, 0});
          } else {
            forest.push_back({ParentLabel::Kind::event, l.get<std::size_t>()});
          }
        }
        ExogenousCurve curve;
        curve.grid = sess["curve"]["grid"].get<std::vector<double>>();
        curve.median = sess["curve"]["median"].get<std::vector<double>>();
        curve.lower = sess["curve"]["lower"].get<std::vector<double>>();
        curve.upper = sess["curve"]["upper"].get<std::vector<double>>();
        const std::string name = "branching_" + specs[k].label() + "_" + std::to_string(idx) + ".svg";
        std::ofstream(config.output_dir / "plots" / name)
            << branching_svg(session, forest, curve, specs[k].label() + " " + session.person_id + "/" + session.session_id);
      }
    }
    std::ofstream(config.output_dir / "plots" / "branching_factor.svg")
        << density_svg(curves, "Population branching factor", "branching factor");
    std::ofstream(config.output_dir / "plots" / "sweep.svg")
        << sweep_svg(sweeps, "Branching-factor prior power-scaling");
  }
  return out;
}

}  // namespace hawkes
