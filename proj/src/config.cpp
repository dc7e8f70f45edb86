#include "hawkes/config.hpp"

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "hawkes/io.hpp"

namespace hawkes {
namespace {

using json = nlohmann::json;

// Reads the members of one JSON object and rejects any it was not asked for.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!it->is_boolean()) throw ValidationError("expected a boolean");
      } else if constexpr (std::is_unsigned_v<T> || std::is_same_v<T, int>) {
        if (!it->is_number_integer()) throw ValidationError("expected an integer");
        if constexpr (std::is_unsigned_v<T>) {
          if (it->template get<long long>() < 0) throw ValidationError("expected a non-negative integer");
        }
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->is_number()) throw ValidationError("expected a number");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!it->is_string()) throw ValidationError("expected a string");
      }
      out = it->template get<T>();
    } catch (const std::exception& e) {
      throw ValidationError(where(key) + ": " + e.what());
    }
  }

  void get_numbers(const char* key, std::vector<double>& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_array()) throw ValidationError(where(key) + ": expected an array of numbers");
    out.clear();
    for (const auto& v : *it) {
      if (!v.is_number()) throw ValidationError(where(key) + ": expected an array of numbers");
      out.push_back(v.get<double>());
    }
  }

  [[nodiscard]] const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  [[nodiscard]] std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? std::string("config") : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ValidationError("unknown config key '" + where(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

std::filesystem::path resolve(const std::string& p, const std::filesystem::path& base) {
  const std::filesystem::path path(p);
  if (path.is_absolute() || base.empty()) return path;
  return base / path;
}

}  // namespace

void RunConfig::validate() const {
  auto check = [](bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
  };
  check(!models.empty(), "models: at least one model is required");
  try {
    sampler.validate();
    priors.validate();
    simulate.validate();
  } catch (const ValidationError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  check(sampler.draws >= 100, "sampler.draws: at least 100 draws per chain are required");
  check(power.prior >= 0.0 && std::isfinite(power.prior), "power.prior must be >= 0");
  check(power.likelihood >= 0.0 && std::isfinite(power.likelihood), "power.likelihood must be >= 0");
  check(gate.max_rhat > 1.0, "gate.max_rhat must exceed 1");
  check(gate.min_ess >= 0.0, "gate.min_ess must be >= 0");
  check(!gof.levels.empty(), "gof.levels must not be empty");
  for (double l : gof.levels) check(l > 0.0 && l < 1.0, "gof.levels must lie in (0, 1)");
  check(gof.ljung_box_lag >= 1, "gof.ljung_box_lag must be >= 1");
  check(!sensitivity.deltas.empty(), "sensitivity.deltas must not be empty");
  for (double d : sensitivity.deltas) check(d > 0.0 && std::isfinite(d), "sensitivity.deltas must be positive");
  check(sensitivity.tau > 0.0, "sensitivity.tau must be positive");
  check(branching.grid_points >= 2, "branching.grid_points must be >= 2");
  check(branching.hdi_mass > 0.0 && branching.hdi_mass < 1.0, "branching.hdi_mass must lie in (0, 1)");
  check(sessions_csv.empty() == events_csv.empty(), "data: give both sessions and events or neither");
}

RunConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  RunConfig cfg;
  ObjectReader r(root, "");

  if (const json* m = r.child("models")) {
    if (!m->is_array()) throw ValidationError("models: expected an array of model names");
    cfg.models.clear();
    for (const auto& v : *m) {
      if (!v.is_string()) throw ValidationError("models: expected an array of model names");
      try {
        cfg.models.push_back(parse_model_kind(v.get<std::string>()));
      } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string("models: ") + e.what());
      }
    }
  }
  r.get("poisson_baselines", cfg.poisson_baselines);
  r.get("seed", cfg.seed);
  r.get("plots", cfg.plots);
  std::string out_dir = cfg.output_dir.string();
  r.get("output_dir", out_dir);
  cfg.output_dir = resolve(out_dir, base_dir);

  if (const json* d = r.child("data")) {
    ObjectReader dr(*d, "data");
    std::string s, e;
    dr.get("sessions", s);
    dr.get("events", e);
    dr.finish();
    if (!s.empty()) cfg.sessions_csv = resolve(s, base_dir);
    if (!e.empty()) cfg.events_csv = resolve(e, base_dir);
  }
  if (const json* s = r.child("simulate")) {
    ObjectReader sr(*s, "simulate");
    CohortTemplate& t = cfg.simulate;
    sr.get("persons", t.persons);
    sr.get("session_count_p", t.session_count_p);
    sr.get("max_sessions", t.max_sessions);
    sr.get("duration_mean", t.duration_mean);
    sr.get("duration_log_sd", t.duration_log_sd);
    sr.get("min_duration", t.min_duration);
    sr.get("max_duration", t.max_duration);
    sr.get("delta_mu_scale", t.delta_mu_scale);
    sr.get("subcritical_only", t.subcritical_only);
    if (const json* h = sr.child("hyper")) {
      ObjectReader hr(*h, "simulate.hyper");
      hr.get("mu_mu", t.hyper.mu_mu);
      hr.get("mu_alpha", t.hyper.mu_alpha);
      hr.get("mu_beta", t.hyper.mu_beta);
      hr.get("sigma_mu", t.hyper.sigma_mu);
      hr.get("sigma_alpha", t.hyper.sigma_alpha);
      hr.get("sigma_beta", t.hyper.sigma_beta);
      hr.finish();
    }
    sr.finish();
  }
  if (const json* s = r.child("sampler")) {
    ObjectReader sr(*s, "sampler");
    sr.get("chains", cfg.sampler.chains);
    sr.get("warmup", cfg.sampler.warmup);
    sr.get("draws", cfg.sampler.draws);
    sr.get("target_accept", cfg.sampler.target_accept);
    sr.get("max_depth", cfg.sampler.max_depth);
    sr.get("max_divergent_fraction", cfg.sampler.max_divergent_fraction);
    sr.get("init_radius", cfg.sampler.init_radius);
    sr.finish();
  }
  if (const json* p = r.child("priors")) {
    ObjectReader pr(*p, "priors");
    PriorConfig& c = cfg.priors;
    pr.get("mu_mu_scale", c.mu_mu_scale);
    pr.get("mu_alpha_shape", c.mu_alpha_shape);
    pr.get("mu_alpha_scale", c.mu_alpha_scale);
    pr.get("mu_beta_scale", c.mu_beta_scale);
    pr.get("sigma_mu_scale", c.sigma_mu_scale);
    pr.get("sigma_alpha_scale", c.sigma_alpha_scale);
    pr.get("sigma_beta_scale", c.sigma_beta_scale);
    pr.get("unpooled_mu_scale", c.unpooled_mu_scale);
    pr.get("unpooled_beta_scale", c.unpooled_beta_scale);
    pr.get("pooled_upper", c.pooled_upper);
    pr.get("delta_mu_scale", c.delta_mu_scale);
    pr.finish();
  }
  if (const json* p = r.child("power")) {
    ObjectReader pr(*p, "power");
    pr.get("prior", cfg.power.prior);
    pr.get("likelihood", cfg.power.likelihood);
    pr.finish();
  }
  if (const json* g = r.child("gate")) {
    ObjectReader gr(*g, "gate");
    gr.get("max_rhat", cfg.gate.max_rhat);
    gr.get("min_ess", cfg.gate.min_ess);
    gr.get("max_divergent", cfg.gate.max_divergent);
    gr.finish();
  }
  if (const json* g = r.child("gof")) {
    ObjectReader gr(*g, "gof");
    gr.get_numbers("levels", cfg.gof.levels);
    gr.get("min_events", cfg.gof.min_events);
    gr.get("ljung_box_lag", cfg.gof.ljung_box_lag);
    gr.finish();
  }
  if (const json* s = r.child("sensitivity")) {
    ObjectReader sr(*s, "sensitivity");
    sr.get_numbers("deltas", cfg.sensitivity.deltas);
    sr.get("tau", cfg.sensitivity.tau);
    sr.finish();
  }
  if (const json* b = r.child("branching")) {
    ObjectReader br(*b, "branching");
    br.get("grid_points", cfg.branching.grid_points);
    br.get("hdi_mass", cfg.branching.hdi_mass);
    br.get("max_sessions", cfg.branching.max_sessions);
    br.get("forest_draws", cfg.branching.forest_draws);
    br.finish();
  }
  r.finish();
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open config " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), file.parent_path());
}

std::string canonical_config(const RunConfig& c) {
  json j;
  json models = json::array();
  for (ModelKind m : c.models) models.push_back(std::string(to_string(m)));
  j["models"] = models;
  j["poisson_baselines"] = c.poisson_baselines;
  j["seed"] = c.seed;
  j["plots"] = c.plots;
  j["data"] = {{"sessions", c.sessions_csv.string()}, {"events", c.events_csv.string()}};
  const CohortTemplate& t = c.simulate;
  j["simulate"] = {{"persons", t.persons},
                   {"session_count_p", t.session_count_p},
                   {"max_sessions", t.max_sessions},
                   {"duration_mean", t.duration_mean},
                   {"duration_log_sd", t.duration_log_sd},
                   {"min_duration", t.min_duration},
                   {"max_duration", t.max_duration},
                   {"delta_mu_scale", t.delta_mu_scale},
                   {"subcritical_only", t.subcritical_only},
                   {"hyper",
                    {{"mu_mu", t.hyper.mu_mu},
                     {"mu_alpha", t.hyper.mu_alpha},
                     {"mu_beta", t.hyper.mu_beta},
                     {"sigma_mu", t.hyper.sigma_mu},
                     {"sigma_alpha", t.hyper.sigma_alpha},
                     {"sigma_beta", t.hyper.sigma_beta}}}};
  const SamplerConfig& s = c.sampler;
  j["sampler"] = {{"chains", s.chains},
                  {"warmup", s.warmup},
                  {"draws", s.draws},
                  {"target_accept", s.target_accept},
                  {"max_depth", s.max_depth},
                  {"max_divergent_fraction", s.max_divergent_fraction},
                  {"init_radius", s.init_radius}};
  const PriorConfig& p = c.priors;
  j["priors"] = {{"mu_mu_scale", p.mu_mu_scale},
                 {"mu_alpha_shape", p.mu_alpha_shape},
                 {"mu_alpha_scale", p.mu_alpha_scale},
                 {"mu_beta_scale", p.mu_beta_scale},
                 {"sigma_mu_scale", p.sigma_mu_scale},
                 {"sigma_alpha_scale", p.sigma_alpha_scale},
                 {"sigma_beta_scale", p.sigma_beta_scale},
                 {"unpooled_mu_scale", p.unpooled_mu_scale},
                 {"unpooled_beta_scale", p.unpooled_beta_scale},
                 {"pooled_upper", p.pooled_upper},
                 {"delta_mu_scale", p.delta_mu_scale}};
  j["power"] = {{"prior", c.power.prior}, {"likelihood", c.power.likelihood}};
  j["gate"] = {{"max_rhat", c.gate.max_rhat}, {"min_ess", c.gate.min_ess}, {"max_divergent", c.gate.max_divergent}};
  j["gof"] = {{"levels", c.gof.levels}, {"min_events", c.gof.min_events}, {"ljung_box_lag", c.gof.ljung_box_lag}};
  j["sensitivity"] = {{"deltas", c.sensitivity.deltas}, {"tau", c.sensitivity.tau}};
  j["branching"] = {{"grid_points", c.branching.grid_points},
                    {"hdi_mass", c.branching.hdi_mass},
                    {"max_sessions", c.branching.max_sessions},
                    {"forest_draws", c.branching.forest_draws}};
  return j.dump();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hawkes
