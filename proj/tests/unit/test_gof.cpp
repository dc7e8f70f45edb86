#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hawkes/gof.hpp"
#include "hawkes/psis.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/stats.hpp"

using namespace hawkes;

namespace {

std::vector<double> sorted_uniforms(Rng& rng, std::size_t n) {
  std::vector<double> u(n);
  for (auto& v : u) v = rng.uniform();
  std::sort(u.begin(), u.end());
  return u;
}

double chi2_uniform_p(const std::vector<double>& p, std::size_t bins) {
  std::vector<double> counts(bins, 0.0);
  for (double v : p) counts[std::min(bins - 1, static_cast<std::size_t>(v * static_cast<double>(bins)))] += 1.0;
  const double expected = static_cast<double>(p.size()) / static_cast<double>(bins);
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  return stats::chi_squared_sf(chi2, static_cast<double>(bins - 1));
}

// Posterior with every draw equal to `theta`.
PosteriorDraws constant_posterior(const ModelSpec& spec, const std::vector<double>& theta, std::size_t n) {
  PosteriorDraws d;
  d.model = spec.label();
  d.chains = 1;
  d.draws = n;
  d.names = spec.param_names();
  for (std::size_t i = 0; i < n; ++i) d.values.insert(d.values.end(), theta.begin(), theta.end());
  d.sessions = spec.session_count();
  return d;
}

Cohort single_person(const std::vector<Session>& sessions) {
  Cohort c;
  Person p;
  p.id = "p0";
  p.sessions = sessions;
  c.persons.push_back(p);
  return c;
}

}  // namespace

TEST_SUITE("gof") {
  TEST_CASE("durbin transform keeps uniform order statistics uniform") {
    Rng rng(1, 1);
    std::vector<double> p;
    for (int rep = 0; rep < 5000; ++rep) {
      const auto v = durbin_transform(sorted_uniforms(rng, 20));
      CHECK(std::is_sorted(v.begin(), v.end()));
      const double d = stats::ks_statistic(v, [](double x) { return std::clamp(x, 0.0, 1.0); });
      p.push_back(stats::ks_pvalue(v.size(), d));
    }
    CHECK(chi2_uniform_p(p, 20) > 0.001);
  }

  TEST_CASE("lewis test size on unit-rate sessions") {
    const HawkesParams unit = HawkesParams::homogeneous(1.0);
    int rejected = 0;
    for (std::uint64_t rep = 0; rep < 1000; ++rep) {
      const Session s = simulate_session_thinning(unit, 50.0, {2, rep});
      const TestResult r = lewis_durbin_test(rtct_transform(unit, s));
      REQUIRE(!r.skipped);
      if (r.p_value < 0.05) ++rejected;
    }
    const double rate = rejected / 1000.0;
    CHECK(rate >= 0.03);
    CHECK(rate <= 0.07);
  }

  TEST_CASE("lewis test detects a missing kernel") {
    const HawkesParams truth{0.2, 0.8, 1.0, 0.2};
    const HawkesParams wrong{0.2, 0.0, 1.0, 0.2};
    int rejected = 0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
      const Session s = simulate_session_thinning(truth, 300.0, {3, rep});
      if (lewis_durbin_test(rtct_transform(wrong, s)).p_value < 0.05) ++rejected;
    }
    CHECK(rejected / 200.0 > 0.5);
  }

  TEST_CASE("lewis test skips sparse sessions and rejects bad residuals") {
    RtctResiduals r;
    r.transformed_times = {0.5, 1.0, 2.0, 3.0};
    r.total_mass = 4.0;
    CHECK(lewis_durbin_test(r).skipped);
    r.transformed_times.push_back(std::nan(""));
    CHECK_THROWS_AS((void)lewis_durbin_test(r), std::invalid_argument);
  }

  TEST_CASE("ks exponential size and power") {
    Rng rng(4, 1);
    int rejected = 0;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> x(10000);
      for (auto& v : x) v = rng.exponential(1.0);
      if (ks_exponential_test(x).p_value < 0.05) ++rejected;
    }
    CHECK(rejected / 200.0 >= 0.02);
    CHECK(rejected / 200.0 <= 0.09);

    int detected = 0;
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> x(500);
      for (auto& v : x) v = rng.exponential(2.0);
      if (ks_exponential_test(x).p_value < 0.05) ++detected;
    }
    CHECK(detected >= 99);
    CHECK(ks_exponential_test(std::vector<double>{}).skipped);
    CHECK_THROWS_AS((void)ks_exponential_test(std::vector<double>{1.0, 0.0, 2.0, 1.0, 1.0}), std::invalid_argument);
  }

  TEST_CASE("ljung box size and power") {
    Rng rng(5, 1);
    int rejected = 0;
    int detected = 0;
    for (int rep = 0; rep < 1000; ++rep) {
      std::vector<double> iid(200), ar(200);
      for (auto& v : iid) v = rng.uniform();
      double z = rng.normal();
      for (auto& v : ar) {
        z = 0.5 * z + std::sqrt(0.75) * rng.normal();
        v = stats::normal_cdf(z);
      }
      if (ljung_box_test(iid).p_value < 0.05) ++rejected;
      if (ljung_box_test(ar).p_value < 0.05) ++detected;
    }
    CHECK(rejected / 1000.0 >= 0.03);
    CHECK(rejected / 1000.0 <= 0.075);
    CHECK(detected / 1000.0 > 0.9);
    CHECK(ljung_box_test(std::vector<double>(50, 0.3)).skipped);
    CHECK(ljung_box_test(std::vector<double>{0.1, 0.2, 0.3}).skipped);
  }

  TEST_CASE("ppc over a degenerate posterior collapses to the plug-in") {
    const HawkesParams truth{0.1, 0.5, 0.8, 0.3};
    std::vector<Session> sessions;
    for (std::uint64_t i = 0; i < 2; ++i) {
      Session s = simulate_session_thinning(truth, 200.0, {6, i});
      s.person_id = "p0";
      s.session_id = "s" + std::to_string(i);
      sessions.push_back(s);
    }
    Session sparse;
    sparse.person_id = "p0";
    sparse.session_id = "sparse";
    sparse.duration = 50.0;
    sparse.times = {3.0, 9.0, 20.0};
    sessions.push_back(sparse);
    const ModelSpec spec = build_model(ModelKind::pooled, single_person(sessions));
    const std::vector<double> theta = {0.1, 0.5, 0.8, 0.2, 0.2, 0.2};
    const PosteriorDraws draws = constant_posterior(spec, theta, 120);
    const PpcResult r = ppc_lewis(spec, draws, 0);
    REQUIRE(r.p_values.size() == 120);
    const double plug_in = lewis_durbin_test(rtct_transform(spec.session_params(theta, 0), sessions[0])).p_value;
    for (double p : r.p_values) CHECK(p == plug_in);
    CHECK(ppc_lewis(spec, draws, 2).skipped);
    CHECK_THROWS_AS((void)ppc_lewis(spec, constant_posterior(spec, theta, 50), 0), std::invalid_argument);
  }

  TEST_CASE("ppc at a fitted truth is not concentrated near zero") {
    const HawkesParams truth{0.1, 0.5, 0.8, 0.1};
    std::vector<Session> sessions;
    for (std::uint64_t i = 0; i < 4; ++i) {
      Session s = simulate_session_thinning(truth, 150.0, {7, i});
      s.person_id = "p0";
      s.session_id = "s" + std::to_string(i);
      sessions.push_back(s);
    }
    const ModelSpec spec = build_model(ModelKind::pooled, single_person(sessions));
    SamplerConfig cfg;
    cfg.chains = 2;
    cfg.warmup = 400;
    cfg.draws = 200;
    cfg.seed = 5;
    cfg.target_accept = 0.9;
    const PosteriorDraws draws = sample(spec, cfg);
    const PpcResult r = ppc_lewis(spec, draws, 0);
    REQUIRE(!r.skipped);
    CHECK(stats::quantile(r.p_values, 0.5) > 0.1);
  }

  TEST_CASE("session and person aggregation") {
    std::vector<Session> a, b;
    const HawkesParams truth{0.2, 0.3, 1.0, 0.2};
    Cohort c;
    for (int n = 0; n < 3; ++n) {
      Person p;
      p.id = "p" + std::to_string(n);
      for (int i = 0; i <= n; ++i) {
        Session s = simulate_session_thinning(truth, 60.0, {8, static_cast<std::uint64_t>(10 * n + i)});
        s.person_id = p.id;
        s.session_id = "s" + std::to_string(i);
        p.sessions.push_back(s);
      }
      c.persons.push_back(p);
    }
    const ModelSpec spec = build_model(ModelKind::unpooled, c);
    std::vector<double> theta(spec.dimension(), 0.2);
    const GofReport rep = goodness_of_fit(spec, constant_posterior(spec, theta, 10));
    REQUIRE(rep.levels.size() == 3);
    std::size_t tested = 0;
    std::size_t pass = 0;
    double person_mean = 0.0;
    std::size_t persons = 0;
    for (const auto& person : rep.persons) {
      std::size_t pt = 0;
      std::size_t pp = 0;
      for (const auto& s : rep.sessions) {
        if (s.person_id != person.person_id || s.lewis.skipped) continue;
        ++pt;
        if (s.lewis.p_value > 0.05) ++pp;
      }
      tested += pt;
      pass += pp;
      if (pt > 0) {
        CHECK(person.non_rejection[0] == doctest::Approx(static_cast<double>(pp) / static_cast<double>(pt)));
        person_mean += person.non_rejection[0];
        ++persons;
      }
    }
    CHECK(rep.tested_sessions == tested);
    if (tested > 0) CHECK(rep.session_non_rejection[0] == doctest::Approx(static_cast<double>(pass) / static_cast<double>(tested)));
    if (persons > 0) CHECK(rep.person_non_rejection[0] == doctest::Approx(person_mean / static_cast<double>(persons)));
  }
}

TEST_SUITE("psis") {
  TEST_CASE("tail length") {
    CHECK(psis_tail_length(4000) == 190);
    CHECK(psis_tail_length(100) == 20);
  }

  TEST_CASE("generalized Pareto fit recovers the shape") {
    Rng rng(1, 2);
    std::vector<double> x(5000);
    const double k = 0.5;
    for (auto& v : x) v = std::expm1(-k * std::log(rng.uniform())) / k;  // sigma = 1
    std::sort(x.begin(), x.end());
    const GpdFit fit = gpd_fit(x);
    CHECK(fit.k == doctest::Approx(k).epsilon(0.1));
    CHECK(fit.sigma == doctest::Approx(1.0).epsilon(0.1));
  }

  TEST_CASE("constant ratios take the exact path") {
    const std::size_t draws = 200;
    const std::size_t sessions = 3;
    std::vector<double> ll(draws * sessions);
    for (std::size_t d = 0; d < draws; ++d) {
      for (std::size_t i = 0; i < sessions; ++i) ll[d * sessions + i] = -1.5 * static_cast<double>(i + 1);
    }
    const LooResult r = psis_loo(ll, draws, sessions);
    for (std::size_t i = 0; i < sessions; ++i) {
      CHECK(r.elpd_i[i] == doctest::Approx(-1.5 * static_cast<double>(i + 1)));
      CHECK(r.k_hat[i] < 0.0);
    }
    CHECK(r.p_loo == doctest::Approx(0.0).scale(1.0));
  }

  TEST_CASE("smoothed weights keep order and stay below the raw maximum") {
    Rng rng(2, 2);
    std::vector<double> lr(1000);
    for (auto& v : lr) v = 2.0 * rng.normal();
    const PsisWeights w = psis(lr);
    std::vector<std::size_t> order(lr.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lr[a] < lr[b]; });
    for (std::size_t j = 1; j < order.size(); ++j) CHECK(w.smoothed[order[j]] >= w.smoothed[order[j - 1]]);
    CHECK(*std::max_element(w.smoothed.begin(), w.smoothed.end()) <= 0.0);
    CHECK(stats::log_sum_exp(w.log_weights) == doctest::Approx(0.0).scale(1.0));
    CHECK(std::isfinite(w.k_hat));
  }

  TEST_CASE("normal-normal model matches analytic leave-one-out") {
    Rng rng(3, 2);
    const std::size_t n = 20;
    const double tau2 = 4.0;
    std::vector<double> y(n);
    for (auto& v : y) v = 1.0 + rng.normal();
    auto posterior = [&](double sum, double count) {
      const double prec = 1.0 / tau2 + count;
      return std::pair{sum / prec, 1.0 / prec};
    };
    double total = 0.0;
    for (double v : y) total += v;
    const auto [m, var] = posterior(total, static_cast<double>(n));
    const std::size_t draws = 4000;
    std::vector<double> ll(draws * n);
    for (std::size_t d = 0; d < draws; ++d) {
      const double theta = m + std::sqrt(var) * rng.normal();
      for (std::size_t i = 0; i < n; ++i) {
        const double r = y[i] - theta;
        ll[d * n + i] = -0.5 * std::log(2.0 * M_PI) - 0.5 * r * r;
      }
    }
    const LooResult r = psis_loo(ll, draws, n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto [mi, vi] = posterior(total - y[i], static_cast<double>(n - 1));
      const double s2 = 1.0 + vi;
      const double exact = -0.5 * std::log(2.0 * M_PI * s2) - 0.5 * (y[i] - mi) * (y[i] - mi) / s2;
      CHECK(std::abs(r.elpd_i[i] - exact) < 0.1);
    }
    double sum = 0.0;
    for (double e : r.elpd_i) sum += e;
    CHECK(r.elpd == doctest::Approx(sum));
  }

  TEST_CASE("input validation") {
    std::vector<double> ll(50, -1.0);
    CHECK_THROWS_AS((void)psis_loo(ll, 50, 1), std::invalid_argument);
    std::vector<double> bad(200, -1.0);
    bad[7] = std::nan("");
    CHECK_THROWS_AS((void)psis_loo(bad, 200, 1), std::invalid_argument);
  }

  TEST_CASE("stacking weights") {
    CHECK(stacking_weights({{-1.0, -2.0}}) == std::vector<double>{1.0});
    const std::vector<double> a = {-1.0, -2.5, -0.3, -4.0};
    const auto same = stacking_weights({a, a});
    CHECK(same[0] == doctest::Approx(0.5));
    CHECK(same[1] == doctest::Approx(0.5));
    std::vector<double> worse = a;
    for (auto& v : worse) v -= 2.0;
    const auto dom = stacking_weights({worse, a});
    CHECK(dom[1] > 0.99);
    CHECK(dom[0] + dom[1] == doctest::Approx(1.0));

    // Complementary models: each wins half the sessions.
    const auto mix = stacking_weights({{-1.0, -5.0}, {-5.0, -1.0}});
    CHECK(mix[0] == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("compare against itself") {
    LooResult r;
    r.model = "m";
    r.elpd_i = {-1.0, -2.0, -3.0};
    r.elpd = -6.0;
    const auto rows = compare({r, r});
    CHECK(rows[1].elpd_diff == 0.0);
    CHECK(rows[1].dse == 0.0);
    CHECK(rows[0].rank == 0);
  }
}
