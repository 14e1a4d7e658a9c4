#pragma once

#include <cstdint>
#include <vector>

#include "polymer/estimators.hpp"

namespace polymer {

struct FreeEnergyPoint {
    double beta = 0.0;
    double t = 0.0;
    double a_hat = 0.0;   // mean over environments of log Z (modified, truncated)
    double a_se = 0.0;
    int n_env = 0;
    int censored = 0;
    double bias_diag = 0.0;  // island-halving diagnostic for the log plug-in bias
    std::vector<double> env_logs;
};

struct FreeEnergyConfig {
    SmcConfig smc;
    int n_env = 50;
    int max_escalations = 2;      // extinction retries, 4x particles each
    int escalation_factor = 4;
    double max_censored_frac = 0.2;
};

// Per-environment SMC with the extinction escalation protocol. Environment
// streams are keyed by (master, "env", round(t), index) and path streams carry
// no beta dependence, so runs at different beta share every sample.
std::vector<FreeEnergyPoint> free_energy_curve(double beta, const std::vector<double>& t_grid,
                                               const FreeEnergyConfig& config, SeedKey key);

struct Extrapolation {
    double p_hat = 0.0;
    double half_width = 0.0;  // 3 * (misfit-scaled) standard error
    double slope = 0.0;       // coefficient of t^{-1/2}
    double chi2_red = 0.0;
};

// Weighted least-squares fit a(t)/t = p + c t^{-1/2}; the intercept
// extrapolates the rate.
Extrapolation extrapolate_rate(const std::vector<FreeEnergyPoint>& points);

struct SuperadditivityReport {
    FreeEnergyPoint at_s, at_t, at_st;
    double slack = 0.0;    // a(s+t) - a(s) - a(t)
    double sigma = 0.0;    // combined standard error
    double delta = 0.45;
    double bound = 0.0;    // -(s+t)^delta
    bool pass = false;     // slack + 3 sigma >= bound
};

SuperadditivityReport superadditivity_check(double beta, double s, double t,
                                            const FreeEnergyConfig& config, SeedKey key);

// Mean over environments of |log Z(omega) - log Z(omega with stripe [r, r+1)
// removed)|, with shared path streams for the two evaluations.
Estimate stripe_influence(double beta, double t, double stripe_start,
                          const FreeEnergyConfig& config, SeedKey key);

struct FirstDisasterReport {
    std::vector<double> m_grid;
    std::vector<double> mean, se;          // E[min(1/F, M) 1{F < t}]
    std::vector<double> mean_mod, se_mod;  // same with F restricted to F > 1
    double slope = 0.0;                    // of mean against log M
    double lambda = 0.5;                   // strip rate in d = 1
};

FirstDisasterReport first_disaster_mechanism(const std::vector<double>& m_grid, std::uint64_t n,
                                             double horizon, SeedKey key);

struct ConcentrationPoint {
    double t = 0.0;
    double sd = 0.0;
    double sd_lo = 0.0, sd_hi = 0.0;  // bootstrap CI
    int n_env = 0;
};

struct ConcentrationReport {
    std::vector<ConcentrationPoint> points;
    double slope = 0.0;     // of log sd against log t
    double slope_se = 0.0;
};

ConcentrationReport concentration_scan(double beta, const std::vector<double>& t_grid,
                                       const FreeEnergyConfig& config, SeedKey key);

}  // namespace polymer
