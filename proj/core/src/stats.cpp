#include "polymer/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace polymer {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Acklam's rational approximation, |relative error| < 1.15e-9.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425, phigh = 1 - plow;
    double q, r;
    if (p < plow) {
        q = std::sqrt(-2 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    if (p > phigh) {
        q = std::sqrt(-2 * std::log(1 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

double log_normal_tail(double x) {
    if (x < 8.0) return std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
    // asymptotic expansion of Mills' ratio
    double x2 = x * x;
    double series = 1.0 - 1.0 / x2 + 3.0 / (x2 * x2) - 15.0 / (x2 * x2 * x2);
    return -0.5 * x2 - std::log(x) - 0.5 * std::log(2.0 * std::numbers::pi) + std::log(series);
}

double log_normal_interval(double lo, double hi, double mean, double sd) {
    if (!(hi > lo) || !(sd > 0.0))
        throw std::invalid_argument("log_normal_interval: bad arguments");
    double a = (lo - mean) / sd;
    double b = (hi - mean) / sd;
    if (a > 0.0) {
        double la = log_normal_tail(a);
        double lb = log_normal_tail(b);
        return la + std::log1p(-std::exp(lb - la));
    }
    if (b < 0.0) return log_normal_interval(-hi, -lo, -mean, sd);
    double p = normal_cdf(b) - normal_cdf(a);
    return std::log(std::max(p, 1e-300));
}

double truncated_normal(RngStream& rng, double lo, double hi, double mean, double sd) {
    if (!(hi > lo) || !(sd > 0.0)) throw std::invalid_argument("truncated_normal: bad arguments");
    double a = (lo - mean) / sd;
    double b = (hi - mean) / sd;
    bool flipped = false;
    if (b < 0.0) {
        double na = -b, nb = -a;
        a = na;
        b = nb;
        flipped = true;
    }
    double z = 0.5 * (a + b);
    if (a < 0.5) {
        for (int it = 0; it < 100000; ++it) {
            double x = rng.gaussian();
            if (x >= a && x <= b) {
                z = x;
                break;
            }
        }
    } else {
        // Robert's exponential rejection for the one-sided tail, thinned to b.
        const double lambda = 0.5 * (a + std::sqrt(a * a + 4.0));
        for (int it = 0; it < 100000; ++it) {
            double x = a + rng.exponential(lambda);
            if (x > b) continue;
            double rho = std::exp(-0.5 * (x - lambda) * (x - lambda));
            if (rng.uniform() <= rho) {
                z = x;
                break;
            }
        }
    }
    return mean + sd * (flipped ? -z : z);
}

namespace {

double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_cf(a, x);
}

double gamma_cdf(double shape, double rate, double x) {
    if (x <= 0.0) return 0.0;
    return gamma_p(shape, rate * x);
}

double chi_square_sf(double x, double dof) { return gamma_q(dof / 2.0, x / 2.0); }

GofResult chi_square_gof(std::span<const double> observed, std::span<const double> expected,
                         double min_expected) {
    if (observed.size() != expected.size() || observed.empty())
        throw std::invalid_argument("chi_square_gof: size mismatch");
    // Pool low-expectation bins left to right.
    std::vector<double> obs, exp;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp.empty()) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
        } else {
            obs.back() += o_acc;
            exp.back() += e_acc;
        }
    }
    if (exp.size() < 2) return {0.0, 1.0, 0.0};
    double stat = 0.0;
    for (std::size_t i = 0; i < exp.size(); ++i) {
        double d = obs[i] - exp[i];
        stat += d * d / exp[i];
    }
    double dof = static_cast<double>(exp.size() - 1);
    return {stat, chi_square_sf(stat, dof), dof};
}

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sum = 0.0;
    double sign = 1.0;
    for (int j = 1; j <= 100; ++j) {
        double term = std::exp(-2.0 * j * j * lambda * lambda);
        sum += sign * term;
        sign = -sign;
        if (term < 1e-16) break;
    }
    double q = 2.0 * sum;
    return std::min(1.0, std::max(0.0, q));
}

GofResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    std::size_t i = 0, j = 0;
    double d_max = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d_max = std::max(d_max, std::abs(static_cast<double>(i) / na -
                                         static_cast<double>(j) / nb));
    }
    double ne = na * nb / (na + nb);
    double sn = std::sqrt(ne);
    double lambda = (sn + 0.12 + 0.11 / sn) * d_max;
    return {d_max, kolmogorov_sf(lambda), ne};
}

double MeanVar::sd() const { return std::sqrt(variance()); }
double MeanVar::std_err() const {
    return n > 0 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
}

double mean_of(std::span<const double> xs) {
    MeanVar mv;
    for (double x : xs) mv.add(x);
    return mv.mean;
}

double sd_of(std::span<const double> xs) {
    MeanVar mv;
    for (double x : xs) mv.add(x);
    return mv.sd();
}

double pearson_r(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("pearson_r: need paired samples");
    double mx = mean_of(xs), my = mean_of(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mx, dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

LineFit wls_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> sigma) {
    if (x.size() != y.size() || x.size() != sigma.size() || x.size() < 2)
        throw std::invalid_argument("wls_line: need >= 2 points");
    double s = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double sig = std::max(sigma[i], 1e-12);
        double w = 1.0 / (sig * sig);
        s += w;
        sx += w * x[i];
        sy += w * y[i];
        sxx += w * x[i] * x[i];
        sxy += w * x[i] * y[i];
    }
    double det = s * sxx - sx * sx;
    if (std::abs(det) < 1e-300 * std::max(1.0, s * sxx))
        throw std::invalid_argument("wls_line: degenerate design");
    LineFit f;
    f.intercept = (sxx * sy - sx * sxy) / det;
    f.slope = (s * sxy - sx * sy) / det;
    f.se_intercept = std::sqrt(sxx / det);
    f.se_slope = std::sqrt(s / det);
    f.chi2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double sig = std::max(sigma[i], 1e-12);
        double r = (y[i] - f.intercept - f.slope * x[i]) / sig;
        f.chi2 += r * r;
    }
    f.dof = x.size() - 2;
    double infl = f.dof > 0 ? std::sqrt(std::max(1.0, f.chi2 / static_cast<double>(f.dof))) : 1.0;
    f.se_intercept_scaled = f.se_intercept * infl;
    f.se_slope_scaled = f.se_slope * infl;
    return f;
}

LineFit ols_line(std::span<const double> x, std::span<const double> y) {
    std::vector<double> sig(x.size(), 1.0);
    LineFit f = wls_line(x, y, sig);
    // For unit weights the parameter errors come from the residual variance.
    if (f.dof > 0) {
        double s2 = f.chi2 / static_cast<double>(f.dof);
        f.se_intercept *= std::sqrt(s2);
        f.se_slope *= std::sqrt(s2);
        f.se_intercept_scaled = f.se_intercept;
        f.se_slope_scaled = f.se_slope;
    }
    return f;
}

Interval bootstrap_sd_ci(std::span<const double> xs, int n_boot, double level, SeedKey key) {
    if (xs.size() < 2 || n_boot < 10) throw std::invalid_argument("bootstrap_sd_ci: bad input");
    RngStream rng(key);
    std::vector<double> sds(static_cast<std::size_t>(n_boot));
    for (int b = 0; b < n_boot; ++b) {
        MeanVar mv;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(xs.size()));
            if (j >= xs.size()) j = xs.size() - 1;
            mv.add(xs[j]);
        }
        sds[static_cast<std::size_t>(b)] = mv.sd();
    }
    std::sort(sds.begin(), sds.end());
    double alpha = (1.0 - level) / 2.0;
    auto pick = [&](double q) {
        double idx = q * static_cast<double>(n_boot - 1);
        return sds[static_cast<std::size_t>(idx)];
    };
    return {pick(alpha), pick(1.0 - alpha)};
}

}  // namespace polymer
