#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "hawkes/models.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/stats.hpp"

using namespace hawkes;

namespace {

Session make_session(const std::string& person, const std::string& id, std::vector<double> times,
                     double duration) {
  Session s;
  s.person_id = person;
  s.session_id = id;
  s.duration = duration;
  s.times = std::move(times);
  return s;
}

Cohort two_person_cohort() {
  Cohort c;
  for (const char* id : {"a", "b"}) {
    Person p;
    p.id = id;
    p.sessions.push_back(make_session(id, "s0", {1.0, 2.5, 9.0}, 30.0));
    p.sessions.push_back(make_session(id, "s1", {4.0}, 20.0));
    p.sessions.push_back(make_session(id, "s2", {}, 15.0));
    c.persons.push_back(p);
  }
  return c;
}

Cohort small_simulated_cohort(std::uint64_t seed) {
  CohortTemplate t;
  t.persons = 4;
  t.max_sessions = 3;
  t.duration_mean = 40.0;
  t.hyper.mu_mu = 0.1;
  return simulate_cohort(t, seed).cohort;
}

std::vector<double> random_point(Rng& rng, std::size_t dim, double radius = 1.0) {
  std::vector<double> u(dim);
  for (auto& v : u) v = radius * (2.0 * rng.uniform() - 1.0);
  return u;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("layout sizes") {
    const Cohort c = two_person_cohort();
    CHECK(build_model(ModelKind::partial, c).dimension() == 16);
    CHECK(build_model(ModelKind::pooled, c).dimension() == 7);
    CHECK(build_model(ModelKind::unpooled, c).dimension() == 10);
    CHECK(build_model(ModelKind::partial, c).delta_count() == 4);
    CHECK(build_model(ModelKind::pooled, c, {}, ProcessKind::poisson).dimension() == 1);
    CHECK(build_model(ModelKind::partial, c, {}, ProcessKind::poisson).dimension() == 4);
    CHECK_THROWS_AS((void)build_model(ModelKind::pooled, Cohort{}), std::invalid_argument);
    const auto names = build_model(ModelKind::partial, c).param_names();
    CHECK(names[1] == "mu_alpha");
    CHECK(names[6] == "mu[a]");
    CHECK(names.back() == "delta_mu[b:s1]");
  }

  TEST_CASE("gamma prior has mean 1 and median near 0.87") {
    const PriorConfig pr;
    CHECK(pr.mu_alpha_shape * pr.mu_alpha_scale == doctest::Approx(1.0));
    CHECK(stats::gamma_cdf(0.87, pr.mu_alpha_shape, pr.mu_alpha_scale) == doctest::Approx(0.5).epsilon(0.01));
  }

  TEST_CASE("gradient matches finite differences") {
    const Cohort cohort = small_simulated_cohort(3);
    Rng rng(1, 1);
    for (ProcessKind process : {ProcessKind::hawkes, ProcessKind::poisson}) {
      for (ModelKind kind : {ModelKind::pooled, ModelKind::unpooled, ModelKind::partial}) {
        ModelSpec spec = build_model(kind, cohort, {}, process);
        spec.power = {0.7, 1.3};
        CAPTURE(spec.label());
        for (int rep = 0; rep < 50; ++rep) {
          const auto u = random_point(rng, spec.dimension());
          const DensityValue v = spec.log_density(u);
          REQUIRE(v.finite);
          const auto fd = oracle::fd_gradient(
              [&](std::span<const double> x) { return spec.log_density(x, false).total; }, u, 1e-6);
          for (std::size_t k = 0; k < u.size(); ++k) {
            const double scale = std::max(1.0, std::abs(fd[k]));
            CHECK(std::abs(v.gradient[k] - fd[k]) / scale < 1e-5);
          }
        }
      }
    }
  }

  TEST_CASE("total decomposes into its parts") {
    const Cohort cohort = small_simulated_cohort(4);
    Rng rng(2, 2);
    for (ModelKind kind : {ModelKind::pooled, ModelKind::unpooled, ModelKind::partial}) {
      ModelSpec spec = build_model(kind, cohort);
      const auto u = random_point(rng, spec.dimension());
      const DensityValue full = spec.log_density(u, false);
      CHECK(full.total == doctest::Approx(full.log_prior + full.log_prior_fixed + full.log_likelihood +
                                          full.log_jacobian));
      double sum = 0.0;
      for (double s : full.session_loglik) sum += s;
      CHECK(sum == doctest::Approx(full.log_likelihood).epsilon(1e-12));
      spec.power = {0.0, 1.0};
      const DensityValue no_prior = spec.log_density(u, false);
      spec.power = {1.0, 0.0};
      const DensityValue no_lik = spec.log_density(u, false);
      CHECK(no_prior.total + no_lik.total - full.log_jacobian - full.log_prior_fixed ==
            doctest::Approx(full.total));
      CHECK(full.log_prior_branching <= 0.0 + std::abs(full.log_prior_branching));
    }
  }

  TEST_CASE("constrain and unconstrain round-trip") {
    const Cohort cohort = small_simulated_cohort(5);
    Rng rng(3, 3);
    for (ModelKind kind : {ModelKind::pooled, ModelKind::unpooled, ModelKind::partial}) {
      const ModelSpec spec = build_model(kind, cohort);
      for (int rep = 0; rep < 20; ++rep) {
        const auto u = random_point(rng, spec.dimension(), 2.0);
        const auto back = spec.unconstrain(spec.constrain(u));
        for (std::size_t k = 0; k < u.size(); ++k) CHECK(back[k] == doctest::Approx(u[k]).epsilon(1e-12).scale(1.0));
      }
    }
    const ModelSpec pooled = build_model(ModelKind::pooled, cohort);
    std::vector<double> x(pooled.dimension(), 1.0);
    x[0] = 1.5;
    CHECK(pooled.unconstrain(x)[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(pooled.unconstrain(x)[3] == doctest::Approx(0.0).scale(1.0));
    x[1] = 3.5;
    CHECK_THROWS_AS((void)pooled.unconstrain(x), std::domain_error);
    x[1] = -0.1;
    CHECK_THROWS_AS((void)pooled.unconstrain(x), std::domain_error);
  }

  TEST_CASE("jacobian preserves prior mass on one-dimensional slices") {
    Cohort c;
    Person p;
    p.id = "a";
    p.sessions.push_back(make_session("a", "s0", {}, 10.0));
    c.persons.push_back(p);
    for (ModelKind kind : {ModelKind::pooled, ModelKind::unpooled}) {
      ModelSpec spec = build_model(kind, c, {}, ProcessKind::poisson);
      spec.power = {1.0, 0.0};
      REQUIRE(spec.dimension() == 1);
      const double mass = oracle::integrate(
          [&](double u) {
            const double q[] = {u};
            return std::exp(spec.log_density(q, false).total);
          },
          -60.0, 60.0, 1e-10, 60);
      // Half-Cauchy tails beyond |u| = 60 carry negligible mass.
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
    }
  }

  TEST_CASE("session parameters follow the layout") {
    const Cohort c = two_person_cohort();
    const ModelSpec spec = build_model(ModelKind::unpooled, c);
    std::vector<double> x(spec.dimension());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = 0.1 * static_cast<double>(k + 1);
    const HawkesParams p = spec.session_params(x, 4);  // person b, session s1
    CHECK(p.mu == doctest::Approx(x[spec.index_of("mu[b]")]));
    CHECK(p.alpha == doctest::Approx(x[spec.index_of("alpha[b]")]));
    CHECK(p.mu0 - p.mu == doctest::Approx(x[spec.index_of("delta_mu[b:s1]")]));
    const HawkesParams empty = spec.session_params(x, 5);
    CHECK(empty.mu0 == empty.mu);
  }

  TEST_CASE("non-centered person values follow the mean-parameterized LogNormal") {
    const Cohort cohort = small_simulated_cohort(6);
    const ModelSpec spec = build_model(ModelKind::partial, cohort);
    const double m = 0.6;
    const double s = 0.4;
    Rng rng(4, 4);
    std::vector<double> draws;
    std::vector<double> u(spec.dimension(), 0.0);
    u[spec.index_of("mu_alpha")] = std::log(m);
    u[spec.index_of("sigma_alpha")] = std::log(s);
    const std::size_t k = spec.person_block("alpha");
    for (int rep = 0; rep < 4000; ++rep) {
      u[k] = rng.normal();
      draws.push_back(spec.constrain(u)[k]);
    }
    const double loc = std::log(m) - 0.5 * s * s;
    const double d = stats::ks_statistic(draws, [&](double x) { return stats::lognormal_cdf(x, loc, s); });
    CHECK(stats::ks_pvalue(draws.size(), d) > 0.01);
    CHECK(stats::mean(draws) == doctest::Approx(m).epsilon(0.03));
  }
}
