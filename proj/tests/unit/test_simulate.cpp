#include <doctest.h>

#include <cmath>

#include "hawkes/simulate.hpp"
#include "hawkes/stats.hpp"

using namespace hawkes;

namespace {

std::vector<double> interarrivals(const Session& s) {
  std::vector<double> out;
  double prev = 0.0;
  for (double t : s.times) {
    out.push_back(t - prev);
    prev = t;
  }
  return out;
}

}  // namespace

TEST_SUITE("simulate") {
  TEST_CASE("homogeneous counts are Poisson") {
    const HawkesParams p = HawkesParams::homogeneous(0.1);
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
      total += static_cast<double>(simulate_session_thinning(p, 1000.0, {1, rep}).size());
    }
    const double mean = total / 200.0;
    CHECK(std::abs(mean - 100.0) < 3.0 * std::sqrt(100.0 / 200.0));
  }

  TEST_CASE("stationary rate mu / (1 - alpha)") {
    const HawkesParams p{0.05, 0.7, 0.5, 0.05};
    double total = 0.0;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
      total += static_cast<double>(simulate_session_thinning(p, 1e4, {2, rep}).size());
    }
    CHECK(total / 50.0 == doctest::Approx(0.05 * 1e4 / 0.3).epsilon(0.05));
  }

  TEST_CASE("fixed seed reproduces the session") {
    const HawkesParams p{0.1, 0.5, 0.8, 0.4};
    const Session a = simulate_session_thinning(p, 300.0, {9, 4});
    const Session b = simulate_session_thinning(p, 300.0, {9, 4});
    CHECK(a.times == b.times);
    const ClusterSession c = simulate_session_cluster(p, 300.0, {9, 4});
    const ClusterSession d = simulate_session_cluster(p, 300.0, {9, 4});
    CHECK(c.session.times == d.session.times);
    CHECK(c.parents == d.parents);
  }

  TEST_CASE("thinning bound is never exceeded") {
    const HawkesParams p{0.2, 0.8, 2.0, 1.5};
    ThinningStats st;
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
      (void)simulate_session_thinning(p, 200.0, {3, rep}, kDefaultMaxEvents, &st);
    }
    CHECK(st.accepted > 0);
    CHECK(st.max_intensity_to_bound <= 1.0);
  }

  TEST_CASE("event cap") {
    const HawkesParams p{1.0, 1.5, 1.0, 1.0};
    CHECK_THROWS_AS((void)simulate_session_thinning(p, 1e4, {1, 1}, 1000), CappedSimulationError);
    CHECK_THROWS_AS((void)simulate_session_cluster(p, 1e4, {1, 1}, 1000), CappedSimulationError);
  }

  TEST_CASE("cluster without excitation has only immigrants") {
    const ClusterSession c = simulate_session_cluster(HawkesParams::homogeneous(0.2), 500.0, {4, 1});
    CHECK(c.session.size() > 50);
    for (const auto& parent : c.parents) CHECK(parent.kind == ParentLabel::Kind::exogenous);
  }

  TEST_CASE("cluster forest is well formed") {
    const HawkesParams p{0.05, 0.6, 0.5, 0.5};
    const ClusterSession c = simulate_session_cluster(p, 200.0, {5, 1});
    REQUIRE(c.parents.size() == c.session.size());
    for (std::size_t i = 0; i < c.parents.size(); ++i) {
      if (c.parents[i].kind == ParentLabel::Kind::event) CHECK(c.parents[i].index < i);
      if (i > 0) CHECK(c.session.times[i] > c.session.times[i - 1]);
    }
  }

  TEST_CASE("cluster and thinning agree in distribution") {
    const HawkesParams p{0.08, 0.6, 0.7, 0.5};
    std::vector<double> thin_gaps, cluster_gaps, thin_counts, cluster_counts;
    for (std::uint64_t rep = 0; thin_gaps.size() < 10000; ++rep) {
      const Session a = simulate_session_thinning(p, 120.0, {6, rep});
      const Session b = simulate_session_cluster(p, 120.0, {7, rep}).session;
      const auto ga = interarrivals(a);
      const auto gb = interarrivals(b);
      thin_gaps.insert(thin_gaps.end(), ga.begin(), ga.end());
      cluster_gaps.insert(cluster_gaps.end(), gb.begin(), gb.end());
      thin_counts.push_back(static_cast<double>(a.size()));
      cluster_counts.push_back(static_cast<double>(b.size()));
    }
    CHECK(stats::ks_two_sample(thin_gaps, cluster_gaps).p_value > 0.01);
    CHECK(stats::mean(thin_counts) == doctest::Approx(stats::mean(cluster_counts)).epsilon(0.05));
  }

  TEST_CASE("expected descendants per immigrant") {
    const HawkesParams p{0.05, 0.5, 1.0, 0.05};
    double immigrants = 0.0;
    double offspring = 0.0;
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
      const ClusterSession c = simulate_session_cluster(p, 1e4, {8, rep});
      for (const auto& parent : c.parents) {
        if (parent.kind == ParentLabel::Kind::event) {
          offspring += 1.0;
        } else {
          immigrants += 1.0;
        }
      }
    }
    CHECK(offspring / immigrants == doctest::Approx(1.0).epsilon(0.1));
  }

  TEST_CASE("cohort template") {
    const CohortTemplate t;
    const SimulatedCohort a = simulate_cohort(t, 12);
    const SimulatedCohort b = simulate_cohort(t, 12);
    REQUIRE(a.cohort.persons.size() == 70);
    std::vector<double> counts;
    for (std::size_t n = 0; n < 70; ++n) {
      counts.push_back(static_cast<double>(a.cohort.persons[n].sessions.size()));
      CHECK(a.cohort.persons[n].sessions.size() == a.truth[n].delta_mu.size());
      for (std::size_t s = 0; s < a.cohort.persons[n].sessions.size(); ++s) {
        CHECK(a.cohort.persons[n].sessions[s].times == b.cohort.persons[n].sessions[s].times);
        const double T = a.cohort.persons[n].sessions[s].duration;
        CHECK(T >= 5.0);
        CHECK(T <= 137.0);
      }
    }
    const double median = stats::quantile(counts, 0.5);
    CHECK(median >= 3.0);
    CHECK(median <= 7.0);
    const std::size_t events = a.cohort.event_count();
    CHECK(events > 4871 / 4);
    CHECK(events < 4871 * 4);
    validate(a.cohort);
  }

  TEST_CASE("degenerate hierarchy shares alpha") {
    CohortTemplate t;
    t.persons = 10;
    t.hyper.sigma_alpha = 1e-12;
    const SimulatedCohort c = simulate_cohort(t, 3);
    for (const auto& truth : c.truth) CHECK(truth.alpha == doctest::Approx(t.hyper.mu_alpha));
    t.hyper.mu_alpha = 1.2;
    CHECK_THROWS_AS((void)simulate_cohort(t, 3), std::invalid_argument);
  }

  TEST_CASE("subcritical-only cohorts redraw explosive persons") {
    CohortTemplate t;
    t.persons = 200;
    t.max_sessions = 1;
    t.max_duration = 5.0;
    t.hyper.sigma_alpha = 0.8;
    const SimulatedCohort loose = simulate_cohort(t, 4);
    t.subcritical_only = true;
    const SimulatedCohort strict = simulate_cohort(t, 4);
    std::size_t redrawn = 0;
    for (std::size_t n = 0; n < t.persons; ++n) {
      CHECK(strict.truth[n].alpha < 1.0);
      if (loose.truth[n].alpha < 1.0) {
        CHECK(strict.truth[n].alpha == loose.truth[n].alpha);
      } else {
        ++redrawn;
      }
    }
    CHECK(redrawn > 0);
  }
}
