#include "hawkes/gof.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "hawkes/kernels.hpp"
#include "hawkes/stats.hpp"

namespace hawkes {
namespace {

double ks_uniform_statistic(std::span<const double> sorted) {
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    const double v = sorted[j];
    d = std::max({d, static_cast<double>(j + 1) / n - v, v - static_cast<double>(j) / n});
  }
  return d;
}

}  // namespace

std::vector<double> durbin_transform(std::span<const double> u) {
  const std::size_t n = u.size();
  std::vector<double> c(n + 1);
  double prev = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c[i] = u[i] - prev;
    prev = u[i];
  }
  c[n] = 1.0 - prev;
  std::sort(c.begin(), c.end());
  std::vector<double> v(n);
  double acc = 0.0;
  double last = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    // i = j + 1 in one-based indexing
    acc += static_cast<double>(n + 1 - j) * (c[j] - last);
    last = c[j];
    v[j] = acc;
  }
  return v;
}

TestResult lewis_durbin_test(const RtctResiduals& r, std::size_t min_events) {
  const std::size_t n = r.transformed_times.size();
  for (double t : r.transformed_times) {
    if (!std::isfinite(t)) throw std::invalid_argument("lewis_durbin_test: non-finite residual");
  }
  if (!std::isfinite(r.total_mass) || !(r.total_mass > 0.0)) {
    throw std::invalid_argument("lewis_durbin_test: non-finite transformed horizon");
  }
  if (n < min_events) {
    return TestResult::skip("fewer than " + std::to_string(min_events) + " events", n);
  }
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = r.transformed_times[i] / r.total_mass;
  const std::vector<double> v = durbin_transform(u);
  TestResult out;
  out.n_used = n;
  out.statistic = ks_uniform_statistic(v);
  out.p_value = stats::ks_pvalue(n, out.statistic);
  return out;
}

TestResult ks_exponential_test(std::span<const double> x, std::size_t min_points) {
  for (double v : x) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("ks_exponential_test: interarrivals must be positive and finite");
    }
  }
  if (x.size() < min_points) {
    return TestResult::skip("fewer than " + std::to_string(min_points) + " interarrivals", x.size());
  }
  TestResult out;
  out.n_used = x.size();
  out.statistic = stats::ks_statistic(x, [](double v) { return -std::expm1(-v); });
  out.p_value = stats::ks_pvalue_asymptotic(x.size(), out.statistic);
  return out;
}

TestResult ljung_box_test(std::span<const double> x, std::size_t lag) {
  if (lag == 0) throw std::invalid_argument("ljung_box_test: lag must be positive");
  const std::size_t n = x.size();
  if (n < lag + 5) return TestResult::skip("fewer than lag + 5 points", n);
  if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) {
    return TestResult::skip("constant series", n);
  }
  const double m = stats::mean(x);
  double denom = 0.0;
  for (double v : x) denom += (v - m) * (v - m);
  const double nd = static_cast<double>(n);
  double q = 0.0;
  for (std::size_t k = 1; k <= lag; ++k) {
    double num = 0.0;
    for (std::size_t t = k; t < n; ++t) num += (x[t] - m) * (x[t - k] - m);
    const double rho = num / denom;
    q += rho * rho / (nd - static_cast<double>(k));
  }
  TestResult out;
  out.n_used = n;
  out.statistic = nd * (nd + 2.0) * q;
  out.p_value = stats::chi_squared_sf(out.statistic, static_cast<double>(lag));
  return out;
}

std::vector<double> posterior_mean(const PosteriorDraws& draws) {
  std::vector<double> m(draws.dim(), 0.0);
  for (std::size_t i = 0; i < draws.total(); ++i) {
    const auto row = draws.row(i);
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += row[k];
  }
  for (auto& v : m) v /= static_cast<double>(draws.total());
  return m;
}

GofReport goodness_of_fit(const ModelSpec& spec, const PosteriorDraws& draws, const GofOptions& opt) {
  if (draws.dim() != spec.dimension()) throw std::invalid_argument("draws do not match the model");
  GofReport rep;
  rep.model = spec.label();
  rep.levels = opt.levels;
  const std::vector<double> theta = posterior_mean(draws);
  const auto& sessions = spec.sessions();
  std::vector<HawkesParams> params(sessions.size());
  for (std::size_t s = 0; s < sessions.size(); ++s) params[s] = spec.session_params(theta, s);
  const std::vector<RtctResiduals> residuals = kernels::batch_rtct(sessions, params);

  const std::size_t n_levels = opt.levels.size();
  rep.persons.resize(spec.person_count());
  std::vector<std::vector<double>> person_gaps(spec.person_count());
  std::vector<std::vector<std::size_t>> person_pass(spec.person_count(), std::vector<std::size_t>(n_levels, 0));
  std::vector<std::size_t> session_pass(n_levels, 0);

  for (std::size_t s = 0; s < sessions.size(); ++s) {
    const std::size_t n = spec.session_person(s);
    SessionGof g;
    g.session = s;
    g.person_id = sessions[s].person_id;
    g.session_id = sessions[s].session_id;
    g.events = sessions[s].size();
    g.lewis = lewis_durbin_test(residuals[s], opt.min_events);
    if (!g.lewis.skipped) {
      ++rep.tested_sessions;
      ++rep.persons[n].tested_sessions;
      for (std::size_t l = 0; l < n_levels; ++l) {
        if (g.lewis.p_value > opt.levels[l]) {
          ++session_pass[l];
          ++person_pass[n][l];
        }
      }
    }
    person_gaps[n].insert(person_gaps[n].end(), residuals[s].interarrivals.begin(),
                          residuals[s].interarrivals.end());
    rep.sessions.push_back(std::move(g));
  }

  rep.session_non_rejection.assign(n_levels, 0.0);
  rep.person_non_rejection.assign(n_levels, 0.0);
  for (std::size_t l = 0; l < n_levels && rep.tested_sessions > 0; ++l) {
    rep.session_non_rejection[l] =
        static_cast<double>(session_pass[l]) / static_cast<double>(rep.tested_sessions);
  }
  for (std::size_t n = 0; n < spec.person_count(); ++n) {
    PersonGof& p = rep.persons[n];
    p.person_id = spec.person_ids()[n];
    p.non_rejection.assign(n_levels, 0.0);
    if (p.tested_sessions > 0) {
      ++rep.tested_persons;
      for (std::size_t l = 0; l < n_levels; ++l) {
        p.non_rejection[l] =
            static_cast<double>(person_pass[n][l]) / static_cast<double>(p.tested_sessions);
        rep.person_non_rejection[l] += p.non_rejection[l];
      }
    }
    p.ks_exponential = ks_exponential_test(person_gaps[n], opt.min_events);
    std::vector<double> u(person_gaps[n].size());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = -std::expm1(-person_gaps[n][i]);
    p.ljung_box = ljung_box_test(u, opt.ljung_box_lag);
  }
  if (rep.tested_persons > 0) {
    for (auto& v : rep.person_non_rejection) v /= static_cast<double>(rep.tested_persons);
  }
  return rep;
}

PpcResult ppc_lewis(const ModelSpec& spec, const PosteriorDraws& draws, std::size_t session,
                    std::size_t min_events) {
  if (session >= spec.session_count()) throw std::out_of_range("ppc_lewis: no such session");
  if (draws.total() < 100) throw std::invalid_argument("ppc_lewis: need at least 100 draws");
  PpcResult out;
  const Session& s = spec.sessions()[session];
  if (s.size() < min_events) {
    out.skipped = true;
    out.reason = "fewer than " + std::to_string(min_events) + " events";
    return out;
  }
  out.p_values.resize(draws.total());
  const auto total = static_cast<std::ptrdiff_t>(draws.total());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    const HawkesParams p = spec.session_params(draws.row(static_cast<std::size_t>(i)), session);
    out.p_values[static_cast<std::size_t>(i)] = lewis_durbin_test(rtct_transform(p, s), min_events).p_value;
  }
  return out;
}

}  // namespace hawkes
