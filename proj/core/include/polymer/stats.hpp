#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "polymer/rng.hpp"

namespace polymer {

// Standard normal CDF / quantile.
double normal_cdf(double x);
double normal_quantile(double p);

// log P(Z > x), stable far into the tail.
double log_normal_tail(double x);

// log P(lo <= X <= hi) for X ~ N(mean, sd^2), stable when the interval sits
// far in a tail.
double log_normal_interval(double lo, double hi, double mean, double sd);

// Draw X ~ N(mean, sd^2) conditioned on [lo, hi]; exact, works in far tails.
double truncated_normal(RngStream& rng, double lo, double hi, double mean, double sd);

// Regularized incomplete gamma P(a, x) and Q(a, x) = 1 - P(a, x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// CDF of Gamma(shape, rate) at x.
double gamma_cdf(double shape, double rate, double x);

// Survival function of the chi-square distribution with dof degrees of freedom.
double chi_square_sf(double x, double dof);

struct GofResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
};

// Pearson chi-square against expected counts; bins with expected < min_expected
// are pooled into their neighbour. expected need not be normalized.
GofResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                         double min_expected = 5.0);

// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_sf(double lambda);

// One-sample KS test of data (any order) against a CDF.
template <typename Cdf>
GofResult ks_test(std::vector<double> data, Cdf cdf);

// Two-sample KS test.
GofResult ks_two_sample(std::vector<double> a, std::vector<double> b);

struct MeanVar {
    std::uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double sd() const;
    double std_err() const;
};

double mean_of(std::span<const double> xs);
double sd_of(std::span<const double> xs);
double pearson_r(std::span<const double> xs, std::span<const double> ys);

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double se_intercept = 0.0;
    double se_slope = 0.0;
    double chi2 = 0.0;
    std::size_t dof = 0;
    // Parameter errors scaled by sqrt(max(1, chi2/dof)).
    double se_intercept_scaled = 0.0;
    double se_slope_scaled = 0.0;
};

// Weighted least squares fit y = intercept + slope * x with per-point sigmas.
LineFit wls_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> sigma);

// Ordinary least squares (unit weights).
LineFit ols_line(std::span<const double> x, std::span<const double> y);

// Percentile bootstrap confidence interval for the standard deviation.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};
Interval bootstrap_sd_ci(std::span<const double> xs, int n_boot, double level, SeedKey key);

// --- template implementation ---

template <typename Cdf>
GofResult ks_test(std::vector<double> data, Cdf cdf) {
    std::sort(data.begin(), data.end());
    const auto n = data.size();
    double d_max = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double f = cdf(data[i]);
        double lo = static_cast<double>(i) / static_cast<double>(n);
        double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        d_max = std::max({d_max, f - lo, hi - f});
    }
    double sn = std::sqrt(static_cast<double>(n));
    double lambda = (sn + 0.12 + 0.11 / sn) * d_max;
    return {d_max, kolmogorov_sf(lambda), static_cast<double>(n)};
}

}  // namespace polymer
