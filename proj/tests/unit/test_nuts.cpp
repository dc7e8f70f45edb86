#include <doctest.h>

#include <cmath>

#include "../oracles.hpp"
#include "hawkes/diagnostics.hpp"
#include "hawkes/nuts.hpp"
#include "hawkes/rng.hpp"
#include "hawkes/simulate.hpp"
#include "hawkes/stats.hpp"

using namespace hawkes;

namespace {

std::vector<double> column(const NutsOutput& out, std::size_t k) {
  std::vector<double> v;
  for (std::size_t i = 0; i < out.chains * out.draws; ++i) v.push_back(out.positions[i * out.dim + k]);
  return v;
}

ChainSeries chains_of(const NutsOutput& out, std::size_t k) {
  ChainSeries c(out.chains);
  for (std::size_t ch = 0; ch < out.chains; ++ch) {
    for (std::size_t d = 0; d < out.draws; ++d) c[ch].push_back(out.position(ch, d)[k]);
  }
  return c;
}

}  // namespace

TEST_SUITE("nuts") {
  TEST_CASE("leapfrog is reversible") {
    const oracle::StdNormal target(5, 1.7);
    Rng rng(1, 1);
    std::vector<double> q(5), p(5), g(5), inv(5);
    for (std::size_t i = 0; i < 5; ++i) {
      q[i] = rng.normal();
      p[i] = rng.normal();
      inv[i] = 0.5 + rng.uniform();
    }
    const auto q0 = q;
    const auto p0 = p;
    (void)target.log_density_gradient(q, g);
    for (int s = 0; s < 25; ++s) (void)leapfrog(target, q, p, g, inv, 0.1);
    for (auto& v : p) v = -v;
    for (int s = 0; s < 25; ++s) (void)leapfrog(target, q, p, g, inv, 0.1);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(std::abs(q[i] - q0[i]) < 1e-10);
      CHECK(std::abs(-p[i] - p0[i]) < 1e-10);
    }
  }

  TEST_CASE("standard normal in 10 dimensions") {
    const oracle::StdNormal target(10);
    SamplerConfig cfg;
    cfg.seed = 42;
    const NutsOutput out = run_nuts(target, cfg);
    CHECK(out.divergent_count() == 0);
    for (std::size_t k = 0; k < 10; ++k) {
      const auto x = column(out, k);
      CHECK(std::abs(stats::mean(x)) < 0.05);
      const double v = stats::variance(x);
      CHECK(v > 0.9);
      CHECK(v < 1.1);
      CHECK(diag::rhat(chains_of(out, k)) < 1.01);
    }
    double accept = 0.0;
    for (double a : out.accept_stat) accept += a;
    accept /= static_cast<double>(out.accept_stat.size());
    CHECK(std::abs(accept - cfg.target_accept) < 0.05);
  }

  TEST_CASE("deterministic given the seed") {
    const oracle::StdNormal target(3);
    SamplerConfig cfg;
    cfg.seed = 7;
    cfg.warmup = 200;
    cfg.draws = 100;
    const NutsOutput a = run_nuts(target, cfg);
    const NutsOutput b = run_nuts(target, cfg);
    CHECK(a.positions == b.positions);
    cfg.seed = 8;
    CHECK(run_nuts(target, cfg).positions != a.positions);
  }

  TEST_CASE("one-dimensional gaussian draws are calibrated") {
    const oracle::StdNormal target(1, 2.0);
    SamplerConfig cfg;
    cfg.seed = 3;
    cfg.target_accept = 0.8;
    const NutsOutput out = run_nuts(target, cfg);
    // Thin to roughly independent draws, then chi-squared test PIT uniformity.
    std::vector<std::size_t> bins(10, 0);
    std::size_t n = 0;
    for (std::size_t i = 0; i < out.positions.size(); i += 4) {
      const double u = stats::normal_cdf(out.positions[i] / 2.0);
      ++bins[std::min<std::size_t>(9, static_cast<std::size_t>(u * 10.0))];
      ++n;
    }
    double chi2 = 0.0;
    const double expected = static_cast<double>(n) / 10.0;
    for (std::size_t b : bins) chi2 += (static_cast<double>(b) - expected) * (static_cast<double>(b) - expected) / expected;
    CHECK(stats::chi_squared_sf(chi2, 9.0) > 0.001);
  }

  TEST_CASE("adapted acceptance tracks the target") {
    for (std::size_t dim : {1, 4, 10, 50}) {
      const oracle::StdNormal target(dim, 0.3);
      const double delta = 0.95;
      SamplerConfig cfg;
      cfg.seed = 11;
      cfg.target_accept = delta;
      const NutsOutput out = run_nuts(target, cfg);
      const double mean_accept = stats::mean(out.accept_stat);
      CHECK(std::abs(mean_accept - delta) < 0.05);
    }
  }

  TEST_CASE("config validation") {
    SamplerConfig cfg;
    cfg.target_accept = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.target_accept = 0.9;
    cfg.chains = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("pooled model posterior records consistent per-draw terms") {
    CohortTemplate t;
    t.persons = 6;
    t.max_sessions = 3;
    const Cohort cohort = simulate_cohort(t, 5).cohort;
    const ModelSpec spec = build_model(ModelKind::pooled, cohort);
    SamplerConfig cfg;
    cfg.seed = 1;
    cfg.warmup = 300;
    cfg.draws = 200;
    cfg.chains = 2;
    const PosteriorDraws draws = sample(spec, cfg);
    CHECK(draws.total() == 400);
    CHECK(draws.max_loglik_mismatch() < 1e-8);
    CHECK(draws.names == spec.param_names());
    const auto alpha = population_branching_factor(spec, draws);
    CHECK(alpha == draws.column(spec.index_of("alpha")));
  }
}

TEST_SUITE("welch") {
  TEST_CASE("identical samples") {
    const std::vector<double> a = {1.0, 2.0, 3.0, 4.5};
    const WelchResult r = welch_t_test(a, a);
    CHECK(r.t == 0.0);
    CHECK(r.p_value == doctest::Approx(1.0));
  }

  TEST_CASE("separated normals") {
    Rng rng(2, 2);
    std::vector<double> a(4000), b(4000);
    for (auto& v : a) v = rng.normal();
    for (auto& v : b) v = 1.0 + rng.normal();
    CHECK(welch_t_test(a, b).p_value < 1e-10);
  }

  TEST_CASE("degrees of freedom match the Welch-Satterthwaite formula") {
    const std::vector<double> a = {1.0, 2.0, 4.0, 7.0};
    const std::vector<double> b = {3.0, 3.5, 3.2, 2.9, 3.1, 3.3};
    const WelchResult r = welch_t_test(a, b);
    const double va = stats::variance(a) / 4.0;
    const double vb = stats::variance(b) / 6.0;
    const double df = (va + vb) * (va + vb) / (va * va / 3.0 + vb * vb / 5.0);
    CHECK(r.df == doctest::Approx(df));
    CHECK(r.t == doctest::Approx((stats::mean(a) - stats::mean(b)) / std::sqrt(va + vb)));
  }

  TEST_CASE("small shifted-by-zero samples rarely reject") {
    Rng rng(3, 3);
    int high = 0;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> a(10), b(10);
      for (auto& v : a) v = rng.normal();
      for (auto& v : b) v = rng.normal();
      if (welch_t_test(a, b).p_value > 0.05) ++high;
    }
    CHECK(high > 180);
  }

  TEST_CASE("errors") {
    const std::vector<double> empty;
    const std::vector<double> one = {1.0, 1.0};
    const std::vector<double> two = {2.0, 2.0};
    CHECK_THROWS_AS((void)welch_t_test(empty, one), std::invalid_argument);
    CHECK_THROWS_AS((void)welch_t_test(one, two), std::invalid_argument);
  }
}

TEST_SUITE("diagnostics") {
  TEST_CASE("constant chains are degenerate") {
    const ChainSeries c = {std::vector<double>(100, 1.0), std::vector<double>(100, 1.0)};
    CHECK(std::isnan(diag::rhat(c)));
    CHECK(std::isnan(diag::ess_bulk(c)));
    CHECK(std::isnan(diag::ess_tail(c)));
  }

  TEST_CASE("single chain reports no r-hat") {
    Rng rng(1, 9);
    ChainSeries c(1);
    for (int i = 0; i < 500; ++i) c[0].push_back(rng.normal());
    CHECK(std::isnan(diag::rhat(c)));
    CHECK(diag::ess_bulk(c) > 300);
  }

  TEST_CASE("iid chains") {
    Rng rng(5, 9);
    ChainSeries c(4);
    for (auto& chain : c) {
      for (int i = 0; i < 1000; ++i) chain.push_back(rng.normal());
    }
    const double r = diag::rhat(c);
    CHECK(r >= 0.999);
    CHECK(r < 1.01);
    CHECK(diag::ess_bulk(c) == doctest::Approx(4000.0).epsilon(0.1));
    CHECK(diag::ess_tail(c) == doctest::Approx(4000.0).epsilon(0.25));
    const ParamSummary s = summarize("x", c);
    CHECK(s.mcse_mean == doctest::Approx(s.sd / std::sqrt(s.ess_bulk)));
    // sd of a sample sd of N(0,1) with n draws is about 1/sqrt(2n).
    CHECK(s.mcse_sd == doctest::Approx(1.0 / std::sqrt(8000.0)).epsilon(0.15));
  }

  TEST_CASE("autocorrelated chains have reduced ess") {
    Rng rng(6, 9);
    ChainSeries c(4);
    const double phi = 0.9;
    for (auto& chain : c) {
      double x = rng.normal() / std::sqrt(1 - phi * phi);
      for (int i = 0; i < 2000; ++i) {
        x = phi * x + rng.normal();
        chain.push_back(x);
      }
    }
    // AR(1): ESS / S = (1 - phi) / (1 + phi)
    CHECK(diag::ess_basic(c) == doctest::Approx(8000.0 * 0.1 / 1.9).epsilon(0.25));
  }

  TEST_CASE("shifted chain inflates r-hat") {
    Rng rng(7, 9);
    ChainSeries c(4);
    for (std::size_t k = 0; k < 4; ++k) {
      for (int i = 0; i < 500; ++i) c[k].push_back(rng.normal() + (k == 0 ? 2.0 : 0.0));
    }
    CHECK(diag::rhat(c) > 1.1);
  }

  TEST_CASE("rank histogram counts every draw") {
    Rng rng(8, 9);
    ChainSeries c(3);
    for (auto& chain : c) {
      for (int i = 0; i < 200; ++i) chain.push_back(rng.normal());
    }
    const auto h = diag::rank_histogram(c, 20);
    REQUIRE(h.size() == 3);
    for (const auto& row : h) {
      std::size_t total = 0;
      for (std::size_t v : row) total += v;
      CHECK(total == 200);
    }
  }

  TEST_CASE("mcse consistency on a reference diagnostic row") {
    CHECK(0.014843 / std::sqrt(3894.887) == doctest::Approx(0.000238).epsilon(0.01));
  }
}
