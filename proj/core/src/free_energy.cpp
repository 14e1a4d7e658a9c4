#include "polymer/free_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "polymer/parallel.hpp"
#include "polymer/stats.hpp"

namespace polymer {

namespace {

std::uint64_t t_tag(double t) { return static_cast<std::uint64_t>(std::llround(t * 1024.0)); }

struct EnvRun {
    double log_z = 0.0;
    bool censored = false;
    double bias_diag = 0.0;
};

double half_split_bias(const SmcResult& r) {
    // Compare log of the pooled estimate with the average over the two island
    // halves; a positive value estimates the log plug-in bias at half size.
    const auto m = r.island_log.size();
    if (m < 2) return 0.0;
    auto pooled_log = [&](std::size_t lo, std::size_t hi) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = lo; j < hi; ++j) mx = std::max(mx, r.island_log[j]);
        if (std::isinf(mx)) return mx;
        double s = 0.0;
        for (std::size_t j = lo; j < hi; ++j)
            if (!std::isinf(r.island_log[j])) s += std::exp(r.island_log[j] - mx);
        return mx + std::log(s / static_cast<double>(hi - lo));
    };
    double full = pooled_log(0, m);
    double h1 = pooled_log(0, m / 2);
    double h2 = pooled_log(m / 2, m);
    if (std::isinf(h1) || std::isinf(h2)) return 0.0;
    return full - 0.5 * (h1 + h2);
}

EnvRun run_env_with_escalation(const Environment& env, double beta, double t,
                               const FreeEnergyConfig& config, SeedKey path_key,
                               const SmcOptions& opts) {
    SmcConfig cfg = config.smc;
    for (int esc = 0; esc <= config.max_escalations; ++esc) {
        SeedKey kk = esc == 0 ? path_key : path_key.child("retry").child(esc);
        SmcResult r = estimate_partition_smc(env, beta, t, cfg, kk, opts);
        if (!r.extinct) return {r.log_value, false, half_split_bias(r)};
        cfg.n_particles *= config.escalation_factor;
    }
    return {0.0, true, 0.0};
}

std::vector<EnvRun> run_point(double beta, double t, const FreeEnergyConfig& config, SeedKey key,
                              const SmcOptions& opts) {
    const auto n_env = static_cast<std::size_t>(config.n_env);
    std::vector<EnvRun> runs(n_env);
    const Window window = window_for_horizon(t, 1);
    parallel_for(n_env, [&](std::size_t e) {
        Environment env =
            Environment::sample(window, 1, key.child("env").child(t_tag(t)).child(e));
        runs[e] = run_env_with_escalation(env, beta, t, config,
                                          key.child("smc").child(t_tag(t)).child(e), opts);
    });
    return runs;
}

FreeEnergyPoint summarize(double beta, double t, const std::vector<EnvRun>& runs,
                          const FreeEnergyConfig& config) {
    FreeEnergyPoint p;
    p.beta = beta;
    p.t = t;
    p.n_env = static_cast<int>(runs.size());
    MeanVar mv, bias;
    for (const EnvRun& r : runs) {
        if (r.censored) {
            ++p.censored;
            continue;
        }
        mv.add(r.log_z);
        bias.add(r.bias_diag);
        p.env_logs.push_back(r.log_z);
    }
    if (p.censored > config.max_censored_frac * static_cast<double>(runs.size()))
        throw std::runtime_error("particle budget insufficient");
    if (mv.n == 0) throw std::runtime_error("particle budget insufficient");
    p.a_hat = mv.mean;
    p.a_se = mv.std_err();
    p.bias_diag = bias.mean;
    return p;
}

}  // namespace

std::vector<FreeEnergyPoint> free_energy_curve(double beta, const std::vector<double>& t_grid,
                                               const FreeEnergyConfig& config, SeedKey key) {
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1])
            throw std::invalid_argument("free_energy_curve: t grid must increase");
    SmcOptions opts;
    opts.modified = true;
    opts.use_truncation = true;
    std::vector<FreeEnergyPoint> out;
    out.reserve(t_grid.size());
    for (double t : t_grid)
        out.push_back(summarize(beta, t, run_point(beta, t, config, key, opts), config));
    return out;
}

Extrapolation extrapolate_rate(const std::vector<FreeEnergyPoint>& points) {
    if (points.size() < 3) throw std::invalid_argument("extrapolate_rate: need >= 3 points");
    std::vector<double> x, y, sig;
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (i > 0 && points[i].t <= points[i - 1].t)
            throw std::invalid_argument("extrapolate_rate: t must increase");
        x.push_back(1.0 / std::sqrt(points[i].t));
        y.push_back(points[i].a_hat / points[i].t);
        sig.push_back(std::max(points[i].a_se / points[i].t, 1e-12));
    }
    LineFit f = wls_line(x, y, sig);
    Extrapolation e;
    e.p_hat = f.intercept;
    e.slope = f.slope;
    e.half_width = 3.0 * f.se_intercept_scaled;
    e.chi2_red = f.dof > 0 ? f.chi2 / static_cast<double>(f.dof) : 0.0;
    return e;
}

SuperadditivityReport superadditivity_check(double beta, double s, double t,
                                            const FreeEnergyConfig& config, SeedKey key) {
    if (s < 2.0 || t < 2.0) throw std::invalid_argument("superadditivity_check: s, t >= 2");
    SmcOptions opts;
    SuperadditivityReport rep;
    rep.at_s = summarize(beta, s, run_point(beta, s, config, key.child("lane-s"), opts), config);
    rep.at_t = summarize(beta, t, run_point(beta, t, config, key.child("lane-t"), opts), config);
    rep.at_st =
        summarize(beta, s + t, run_point(beta, s + t, config, key.child("lane-st"), opts), config);
    rep.slack = rep.at_st.a_hat - rep.at_s.a_hat - rep.at_t.a_hat;
    rep.sigma = std::sqrt(rep.at_st.a_se * rep.at_st.a_se + rep.at_s.a_se * rep.at_s.a_se +
                          rep.at_t.a_se * rep.at_t.a_se);
    rep.bound = -std::pow(s + t, rep.delta);
    rep.pass = rep.slack + 3.0 * rep.sigma >= rep.bound;
    return rep;
}

Estimate stripe_influence(double beta, double t, double stripe_start,
                          const FreeEnergyConfig& config, SeedKey key) {
    if (stripe_start < 1.0 || stripe_start > t - 1.0)
        throw std::invalid_argument("stripe_influence: need 1 <= r <= t - 1");
    SmcOptions opts;
    const auto n_env = static_cast<std::size_t>(config.n_env);
    const Window window = window_for_horizon(t, 1);
    std::vector<double> influences(n_env);
    std::vector<char> censored(n_env, 0);
    parallel_for(n_env, [&](std::size_t e) {
        Environment env =
            Environment::sample(window, 1, key.child("env").child(t_tag(t)).child(e));
        Environment stripped = env.remove_stripe(stripe_start);
        // Identical path keys on both evaluations: the same particles face the
        // two environments.
        SeedKey pk = key.child("smc").child(t_tag(t)).child(e);
        EnvRun full = run_env_with_escalation(env, beta, t, config, pk, opts);
        EnvRun part = run_env_with_escalation(stripped, beta, t, config, pk, opts);
        if (full.censored || part.censored) {
            censored[e] = 1;
            return;
        }
        influences[e] = std::abs(full.log_z - part.log_z);
    });
    MeanVar mv;
    int n_censored = 0;
    for (std::size_t e = 0; e < n_env; ++e) {
        if (censored[e]) {
            ++n_censored;
            continue;
        }
        mv.add(influences[e]);
    }
    if (n_censored > config.max_censored_frac * static_cast<double>(n_env) || mv.n == 0)
        throw std::runtime_error("particle budget insufficient");
    return {mv.mean, mv.std_err(), mv.n, {key.state, "stripe-influence"}};
}

FirstDisasterReport first_disaster_mechanism(const std::vector<double>& m_grid, std::uint64_t n,
                                             double horizon, SeedKey key) {
    for (double m : m_grid)
        if (m < std::exp(1.0))
            throw std::invalid_argument("first_disaster_mechanism: M >= e required");
    FirstDisasterReport rep;
    rep.m_grid = m_grid;
    // First disaster time in [0, t] x (1/2)U(0): in d = 1 the strip has width
    // 1/2, so F is Exp(1/2).
    rep.lambda = 0.5;
    std::vector<MeanVar> plain(m_grid.size()), mod(m_grid.size());
    RngStream rng(key);
    for (std::uint64_t i = 0; i < n; ++i) {
        double f = rng.exponential(rep.lambda);
        for (std::size_t j = 0; j < m_grid.size(); ++j) {
            double capped = std::min(1.0 / f, m_grid[j]);
            plain[j].add(f < horizon ? capped : 0.0);
            mod[j].add(f > 1.0 && f < horizon ? capped : 0.0);
        }
    }
    std::vector<double> logm;
    for (std::size_t j = 0; j < m_grid.size(); ++j) {
        rep.mean.push_back(plain[j].mean);
        rep.se.push_back(plain[j].std_err());
        rep.mean_mod.push_back(mod[j].mean);
        rep.se_mod.push_back(mod[j].std_err());
        logm.push_back(std::log(m_grid[j]));
    }
    rep.slope = ols_line(logm, rep.mean).slope;
    return rep;
}

ConcentrationReport concentration_scan(double beta, const std::vector<double>& t_grid,
                                       const FreeEnergyConfig& config, SeedKey key) {
    if (config.n_env < 50) throw std::invalid_argument("concentration_scan: n_env >= 50");
    SmcOptions opts;
    ConcentrationReport rep;
    std::vector<double> log_t, log_sd;
    for (double t : t_grid) {
        FreeEnergyPoint p = summarize(beta, t, run_point(beta, t, config, key, opts), config);
        ConcentrationPoint cp;
        cp.t = t;
        cp.sd = sd_of(p.env_logs);
        cp.n_env = static_cast<int>(p.env_logs.size());
        Interval ci = bootstrap_sd_ci(p.env_logs, 400, 0.95, key.child("boot").child(t_tag(t)));
        cp.sd_lo = ci.lo;
        cp.sd_hi = ci.hi;
        rep.points.push_back(cp);
        if (cp.sd > 0.0) {
            log_t.push_back(std::log(t));
            log_sd.push_back(std::log(cp.sd));
        }
    }
    if (log_t.size() >= 2) {
        LineFit f = ols_line(log_t, log_sd);
        rep.slope = f.slope;
        rep.slope_se = f.se_slope;
    }
    return rep;
}

}  // namespace polymer
