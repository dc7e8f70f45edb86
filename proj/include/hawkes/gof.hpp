#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hawkes/models.hpp"
#include "hawkes/nuts.hpp"
#include "hawkes/tpp.hpp"

namespace hawkes {

struct TestResult {
  double statistic{std::numeric_limits<double>::quiet_NaN()};
  double p_value{std::numeric_limits<double>::quiet_NaN()};
  std::size_t n_used{0};
  bool skipped{false};
  std::string reason;

  [[nodiscard]] static TestResult skip(std::string why, std::size_t n = 0) {
    TestResult r;
    r.skipped = true;
    r.reason = std::move(why);
    r.n_used = n;
    return r;
  }
};

/// Durbin's spacings transform of sorted uniforms u_(1..n): returns v_1..v_n.
[[nodiscard]] std::vector<double> durbin_transform(std::span<const double> sorted_uniforms);

/// Lewis test with Durbin's modification on RTCT residuals, scaled by the
/// transformed horizon Lambda(T).
[[nodiscard]] TestResult lewis_durbin_test(const RtctResiduals& residuals, std::size_t min_events = 5);

/// KS test of interarrivals against Exp(1).
[[nodiscard]] TestResult ks_exponential_test(std::span<const double> interarrivals,
                                             std::size_t min_points = 5);

/// Ljung-Box portmanteau test on a series, Q compared to chi-squared(lag).
[[nodiscard]] TestResult ljung_box_test(std::span<const double> series, std::size_t lag = 1);

struct GofOptions {
  std::size_t min_events{5};
  std::size_t ljung_box_lag{1};
  std::vector<double> levels{0.05, 0.10, 0.15};
};

struct SessionGof {
  std::size_t session{0};
  std::string person_id;
  std::string session_id;
  std::size_t events{0};
  TestResult lewis;
};

struct PersonGof {
  std::string person_id;
  std::size_t tested_sessions{0};
  std::vector<double> non_rejection;  // per level, over this person's tested sessions
  TestResult ks_exponential;          // pooled RTCT interarrivals
  TestResult ljung_box;               // pooled U_k = 1 - exp(-tau_k)
};

struct GofReport {
  std::string model;
  std::vector<double> levels;
  std::vector<SessionGof> sessions;
  std::vector<PersonGof> persons;
  std::vector<double> session_non_rejection;  // share of tested sessions with p > level
  std::vector<double> person_non_rejection;   // mean of per-person shares
  std::size_t tested_sessions{0};
  std::size_t tested_persons{0};
};

/// Posterior-mean plug-in of the constrained parameters.
[[nodiscard]] std::vector<double> posterior_mean(const PosteriorDraws& draws);

/// RTCT tests at the posterior-mean plug-in, with session- and person-level
/// non-rejection proportions.
[[nodiscard]] GofReport goodness_of_fit(const ModelSpec& spec, const PosteriorDraws& draws,
                                        const GofOptions& options = {});

struct PpcResult {
  bool skipped{false};
  std::string reason;
  std::vector<double> p_values;  // one per posterior draw
};

/// Lewis-Durbin p-value of one session under every posterior draw.
[[nodiscard]] PpcResult ppc_lewis(const ModelSpec& spec, const PosteriorDraws& draws,
                                  std::size_t session, std::size_t min_events = 5);

}  // namespace hawkes
