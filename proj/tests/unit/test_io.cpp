#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

#include "hawkes/config.hpp"
#include "hawkes/io.hpp"
#include "hawkes/pipeline.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/stats.hpp"
#include "hawkes/svg.hpp"

using namespace hawkes;

namespace {

Cohort ingest_text(const std::string& sessions, const std::string& events) {
  std::istringstream s(sessions);
  std::istringstream e(events);
  return ingest(s, e);
}

std::string error_of(const std::string& sessions, const std::string& events) {
  try {
    (void)ingest_text(sessions, events);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hawkes_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

const std::string kSessions =
    "person_id,session_id,duration_min\n"
    "p1,s1,50\n"
    "p1,s2,30\n"
    "p2,s1,40\n";

PosteriorDraws fake_draws(std::size_t chains, std::size_t n) {
  PosteriorDraws d;
  d.model = "pooled";
  d.chains = chains;
  d.draws = n;
  d.names = {"mu", "alpha", "beta"};
  d.sessions = 2;
  for (std::size_t i = 0; i < chains * n; ++i) {
    const double x = 0.1 + 1e-3 * static_cast<double>(i);
    d.values.insert(d.values.end(), {x, x / 3.0, 1.0 / (1.0 + x)});
    d.log_prior.push_back(-x);
    d.log_prior_branching.push_back(-2.0 * x);
    d.session_loglik.insert(d.session_loglik.end(), {-x, -1.0 / 7.0});
    d.log_likelihood.push_back(-x - 1.0 / 7.0);
    d.divergent.push_back(i % 5 == 0 ? 1 : 0);
    d.tree_depth.push_back(static_cast<int>(i % 7));
    d.energy.push_back(std::sqrt(static_cast<double>(i) + 0.5));
    d.accept_stat.push_back(0.9);
  }
  for (std::size_t c = 0; c < chains; ++c) d.step_size.push_back(0.25 + 0.1 * static_cast<double>(c));
  return d;
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("zero-event sessions are kept") {
    const Cohort c = ingest_text(kSessions, "person_id,session_id,event_time_min\np1,s1,3.5\n");
    REQUIRE(c.persons.size() == 2);
    CHECK(c.session_count() == 3);
    CHECK(c.event_count() == 1);
    CHECK(c.persons[1].sessions[0].empty());
  }

  TEST_CASE("unsorted events are sorted") {
    const Cohort c = ingest_text(kSessions,
                                 "person_id,session_id,event_time_min\np1,s1,9\np1,s1,2.5\np1,s1,4\n");
    CHECK(c.persons[0].sessions[0].times == std::vector<double>{2.5, 4.0, 9.0});
  }

  TEST_CASE("an event past the session end is rejected with its row") {
    const std::string err =
        error_of(kSessions, "person_id,session_id,event_time_min\np1,s1,1\np1,s1,51.0\n");
    CHECK(err.find("row 3") != std::string::npos);
  }

  TEST_CASE("orphan events, duplicates and malformed rows are rejected") {
    CHECK_FALSE(error_of(kSessions, "person_id,session_id,event_time_min\np3,s1,1\n").empty());
    CHECK_FALSE(error_of(kSessions, "person_id,session_id,event_time_min\np1,s1,1\np1,s1,1\n").empty());
    CHECK_FALSE(error_of(kSessions, "person_id,session_id,event_time_min\np1,s1,-1\n").empty());
    CHECK_FALSE(error_of(kSessions, "person_id,session_id,event_time_min\np1,s1,abc\n").empty());
    CHECK_FALSE(error_of(kSessions, "person_id,session_id,event_time_min\np1,s1\n").empty());
    CHECK_FALSE(error_of(kSessions + "p1,s1,20\n", "person_id,session_id,event_time_min\n").empty());
    CHECK_FALSE(error_of("person_id,session_id,duration_min\np1,s1,0\n",
                         "person_id,session_id,event_time_min\n")
                    .empty());
    CHECK_FALSE(error_of("person,session,duration\np1,s1,10\n", "person_id,session_id,event_time_min\n").empty());
  }

  TEST_CASE("write then read is lossless") {
    CohortTemplate tmpl;
    tmpl.persons = 6;
    const Cohort original = simulate_cohort(tmpl, 99).cohort;
    const auto dir = scratch_dir("roundtrip");
    write_cohort(original, dir / "sessions.csv", dir / "events.csv");
    const Cohort back = ingest(dir / "sessions.csv", dir / "events.csv");
    REQUIRE(back.persons.size() == original.persons.size());
    for (std::size_t n = 0; n < back.persons.size(); ++n) {
      const auto& a = original.persons[n];
      const auto& b = back.persons[n];
      CHECK(a.id == b.id);
      REQUIRE(a.sessions.size() == b.sessions.size());
      for (std::size_t s = 0; s < a.sessions.size(); ++s) {
        CHECK(a.sessions[s].session_id == b.sessions[s].session_id);
        CHECK(a.sessions[s].duration == b.sessions[s].duration);
        CHECK(a.sessions[s].times == b.sessions[s].times);
      }
    }
  }

  TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, 50.0}) {
      CHECK(std::stod(format_double(v)) == v);
    }
  }

  TEST_CASE("draws round-trip bit-exactly") {
    const PosteriorDraws d = fake_draws(3, 17);
    const auto dir = scratch_dir("draws");
    write_draws(d, dir);
    CHECK(std::filesystem::exists(draws_chain_path(dir, "pooled", 2)));
    const PosteriorDraws r = read_draws(dir, "pooled");
    CHECK(r.model == d.model);
    CHECK(r.chains == d.chains);
    CHECK(r.draws == d.draws);
    CHECK(r.names == d.names);
    CHECK(r.sessions == d.sessions);
    CHECK(r.values == d.values);
    CHECK(r.log_prior == d.log_prior);
    CHECK(r.log_prior_branching == d.log_prior_branching);
    CHECK(r.log_likelihood == d.log_likelihood);
    CHECK(r.session_loglik == d.session_loglik);
    CHECK(r.divergent == d.divergent);
    CHECK(r.tree_depth == d.tree_depth);
    CHECK(r.energy == d.energy);
    CHECK(r.accept_stat == d.accept_stat);
    CHECK(r.step_size == d.step_size);
  }

  TEST_CASE("missing or corrupt draws are reported") {
    const auto dir = scratch_dir("draws_bad");
    CHECK_THROWS((void)read_draws(dir, "pooled"));
    std::ofstream(draws_chain_path(dir, "pooled", 0), std::ios::binary) << "NOTDRAWS";
    CHECK_THROWS((void)read_draws(dir, "pooled"));
  }
}

TEST_SUITE("config") {
  TEST_CASE("defaults parse and validate") {
    const RunConfig cfg = parse_config("{}");
    CHECK(cfg.models.size() == 3);
    CHECK_NOTHROW(cfg.validate());
  }

  TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS((void)parse_config(R"({"sead": 3})"), ValidationError);
    CHECK_THROWS_AS((void)parse_config(R"({"sampler": {"chain": 2}})"), ValidationError);
    CHECK_THROWS_AS((void)parse_config(R"({"simulate": {"hyper": {"mu_m": 1}}})"), ValidationError);
  }

  TEST_CASE("type and range errors are rejected") {
    CHECK_THROWS_AS((void)parse_config(R"({"seed": "x"})"), ValidationError);
    CHECK_THROWS_AS((void)parse_config(R"({"models": ["hierarchical"]})"), ValidationError);
    CHECK_THROWS_AS((void)parse_config("{not json"), ValidationError);
    CHECK_THROWS_AS((void)parse_config(R"({"sampler": {"draws": 10}})"), ValidationError);
    CHECK_THROWS_AS((void)parse_config(R"({"power": {"likelihood": -1}})"), ValidationError);
  }

  TEST_CASE("relative paths resolve against the config directory") {
    const RunConfig cfg = parse_config(R"({"data": {"sessions": "a/s.csv", "events": "e.csv"}})", "/base");
    CHECK(cfg.sessions_csv == std::filesystem::path("/base/a/s.csv"));
    CHECK(cfg.events_csv == std::filesystem::path("/base/e.csv"));
  }

  TEST_CASE("config hash is stable and sensitive to content") {
    const RunConfig a = parse_config(R"({"seed": 3, "sampler": {"chains": 2}})");
    const RunConfig b = parse_config(R"({"sampler": {"chains": 2}, "seed": 3})");
    RunConfig c = a;
    c.seed = 4;
    RunConfig d = a;
    d.output_dir = "elsewhere";
    const std::string ha = fnv1a_hex(canonical_config(a));
    CHECK(ha.size() == 16);
    CHECK(ha == fnv1a_hex(canonical_config(b)));
    CHECK(ha != fnv1a_hex(canonical_config(c)));
    CHECK(ha == fnv1a_hex(canonical_config(d)));
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  }
}

TEST_SUITE("svg") {
  TEST_CASE("kernel density integrates to one") {
    std::vector<double> x;
    for (int i = 0; i < 500; ++i) x.push_back(std::sin(0.37 * i) + 0.01 * i);
    const DensityCurve k = kernel_density(x, 400);
    double area = 0.0;
    for (std::size_t i = 1; i < k.x.size(); ++i) area += 0.5 * (k.y[i] + k.y[i - 1]) * (k.x[i] - k.x[i - 1]);
    CHECK(area == doctest::Approx(1.0).epsilon(0.005));
    const std::string svg = density_svg({k}, "t", "x");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("class=\"density\"") != std::string::npos);
  }

  TEST_CASE("sweep draws one line per delta and model") {
    std::vector<SweepRow> rows;
    for (double delta : {0.5, 0.8, 1.0, 1.25, 2.0}) rows.push_back({delta, 0.4, 0.1, 0.25, 0.55, 0.1, true});
    const std::string svg = sweep_svg({{"pooled", rows}, {"partial", rows}}, "sweep");
    std::size_t count = 0;
    for (std::size_t pos = 0; (pos = svg.find("class=\"sweep\"", pos)) != std::string::npos; ++pos) ++count;
    CHECK(count == 10);
  }

  TEST_CASE("arcs connect earlier parents to later children") {
    Session s;
    s.person_id = "p";
    s.session_id = "s";
    s.duration = 20.0;
    s.times = {1.0, 2.0, 2.5, 7.0, 7.2, 15.0};
    const HawkesParams params{0.1, 0.6, 1.2, 0.3};
    const BranchingForest forest = sample_forest(trigger_probabilities(params, s), 11);
    const ExogenousCurve curve{0, 0.8, {0.0, 10.0, 20.0}, {0.5, 0.6, 0.7}, {0.4, 0.5, 0.6}, {0.6, 0.7, 0.8}};
    const std::string svg = branching_svg(s, forest, curve, "b");
    const std::regex arc(R"re(class="arc" data-parent="(\d+)" data-child="(\d+)")re");
    std::size_t arcs = 0;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), arc); it != std::sregex_iterator(); ++it) {
      CHECK(std::stoul((*it)[1]) < std::stoul((*it)[2]));
      ++arcs;
    }
    const auto triggered = static_cast<std::size_t>(std::count_if(
        forest.begin(), forest.end(), [](const ParentLabel& p) { return p.kind == ParentLabel::Kind::event; }));
    CHECK(arcs == triggered);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("likelihood power zero recovers the prior") {
    const auto dir = scratch_dir("prior_only");
    CohortTemplate tmpl;
    tmpl.persons = 4;
    write_cohort(simulate_cohort(tmpl, 5).cohort, dir / "sessions.csv", dir / "events.csv");
    RunConfig cfg = parse_config(R"({"models": ["pooled"], "power": {"likelihood": 0},
      "sampler": {"chains": 4, "warmup": 500, "draws": 1000}})",
                                 dir);
    cfg.sessions_csv = dir / "sessions.csv";
    cfg.events_csv = dir / "events.csv";
    cfg.output_dir = dir;
    const auto specs = build_models(cfg, load_cohort(cfg));
    const PosteriorDraws d = fit_model(cfg, specs.front());
    const double upper = cfg.priors.pooled_upper;
    for (const char* name : {"mu", "alpha", "beta"}) {
      std::vector<double> x = d.column(d.index_of(name));
      CHECK(stats::mean(x) == doctest::Approx(upper / 2.0).epsilon(0.08));
      const auto below = std::count_if(x.begin(), x.end(), [&](double v) { return v < upper / 4.0; });
      CHECK(static_cast<double>(below) / static_cast<double>(x.size()) == doctest::Approx(0.25).epsilon(0.25));
    }
  }

  TEST_CASE("same seed gives identical draws") {
    const auto dir = scratch_dir("determinism");
    CohortTemplate tmpl;
    tmpl.persons = 3;
    write_cohort(simulate_cohort(tmpl, 8).cohort, dir / "sessions.csv", dir / "events.csv");
    RunConfig cfg = parse_config(R"({"models": ["partial"], "sampler": {"chains": 2, "warmup": 100, "draws": 100}})");
    cfg.sessions_csv = dir / "sessions.csv";
    cfg.events_csv = dir / "events.csv";
    const auto specs = build_models(cfg, load_cohort(cfg));
    const PosteriorDraws a = fit_model(cfg, specs.front());
    const PosteriorDraws b = fit_model(cfg, specs.front());
    CHECK(a.values == b.values);
    cfg.seed += 1;
    CHECK(fit_model(cfg, specs.front()).values != a.values);
  }
}
