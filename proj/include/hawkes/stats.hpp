#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

namespace hawkes::stats {

[[nodiscard]] double mean(std::span<const double> x) noexcept;
/// Sample variance with n-1 denominator.
[[nodiscard]] double variance(std::span<const double> x) noexcept;
[[nodiscard]] double sd(std::span<const double> x) noexcept;

/// Linear-interpolation quantile (type 7) of an unsorted sample.
[[nodiscard]] double quantile(std::span<const double> x, double prob);
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double prob);

/// Shortest interval over sorted draws containing ceil(mass * n) of them.
[[nodiscard]] std::pair<double, double> hdi(std::span<const double> x, double mass);

[[nodiscard]] double log_sum_exp(std::span<const double> x) noexcept;
[[nodiscard]] double log_sum_exp(double a, double b) noexcept;

// Distribution functions.
[[nodiscard]] double normal_cdf(double x) noexcept;
[[nodiscard]] double normal_quantile(double p);
[[nodiscard]] double lognormal_cdf(double x, double log_location, double log_scale) noexcept;
[[nodiscard]] double gamma_cdf(double x, double shape, double scale);
[[nodiscard]] double half_normal_cdf(double x, double scale) noexcept;
[[nodiscard]] double half_cauchy_cdf(double x, double scale) noexcept;
[[nodiscard]] double chi_squared_sf(double x, double dof);
/// Two-sided p-value of a Student t statistic.
[[nodiscard]] double student_t_two_sided(double t, double dof);

/// Kolmogorov limiting survival function Q(x) = 2 sum (-1)^{k-1} e^{-2 k^2 x^2}.
[[nodiscard]] double kolmogorov_sf(double x) noexcept;

/// One-sample KS p-value via Stephens' finite-n correction of the limit law.
[[nodiscard]] double ks_pvalue_asymptotic(std::size_t n, double d) noexcept;
/// One-sample KS p-value, exact (Marsaglia-Tsang-Wang) for moderate n and
/// the asymptotic form otherwise.
[[nodiscard]] double ks_pvalue(std::size_t n, double d);

/// sup |F_n - F| of the sample against a continuous CDF.
[[nodiscard]] double ks_statistic(std::span<const double> x, const std::function<double(double)>& cdf);

struct TwoSampleKs {
  double statistic{0.0};
  double p_value{1.0};
};
[[nodiscard]] TwoSampleKs ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Average ranks (1-based) with ties sharing the mean rank.
[[nodiscard]] std::vector<double> average_ranks(std::span<const double> x);

}  // namespace hawkes::stats
