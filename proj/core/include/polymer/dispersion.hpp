#pragma once

#include <cstdint>
#include <vector>

#include "polymer/estimators.hpp"

namespace polymer {

// Weighted sample pairs ((x, y), w) with total weight 1.
struct EmpiricalMeasure2D {
    std::vector<double> x, y, w;

    EmpiricalMeasure2D() = default;
    EmpiricalMeasure2D(std::vector<double> xs, std::vector<double> ys, std::vector<double> ws);

    [[nodiscard]] std::size_t size() const { return x.size(); }
};

struct DispersionReport {
    int p = 0;
    double value = 0.0;        // sup over offsets of the min box-pair mass
    double x_star = 0.0, y_star = 0.0;
    double grid_step = 0.5;
    double boundary_loss = 0.0;  // mass within one grid step of the chosen boxes' edges
};

// M^p of a measure: the best mass simultaneously guaranteed in p+1 box pairs
// [x + 7i - 5/2, x + 7i + 5/2] x [y + 7i - 5/2, y + 7i + 5/2], i = 0..p,
// with the sup over (x, y) taken on a lattice of the given step. The lattice
// value underestimates the true sup by at most the reported boundary mass.
DispersionReport dispersion(const EmpiricalMeasure2D& measure, int p, double grid_step = 0.5);

struct MidpointSample {
    EmpiricalMeasure2D measure;  // law of (B(r), B(s)) given survival to t
    std::uint64_t distinct_ancestors = 0;
    double ess = 0.0;
    bool extinct = false;
};

// Samples the conditional midpoint measure: SMC against the environment with
// the stripe [r, s) removed, genealogy keeping only the positions at r and s.
MidpointSample sample_midpoint_measure(const Environment& env, double beta, double r, double s,
                                       double t, const SmcConfig& config, SeedKey key);

struct DispersionScanPoint {
    double t = 0.0;
    double mean_abs_log_m2 = 0.0;
    double se_abs_log_m2 = 0.0;
    double floored_fraction = 0.0;  // M^2 below the particle resolution
    double min_m0 = 1.0;
    double min_m0_t4 = 0.0;  // min over environments of M^0 t^4
    double min_m0_t2 = 0.0;
    double mean_ess = 0.0;
    int n_env = 0;
};

struct DispersionScanReport {
    std::vector<DispersionScanPoint> points;
    double log_fit_intercept = 0.0;  // fit of E|log M^2| against log t
    double log_fit_slope = 0.0;
};

// Midpoint dispersion across environments at r = s = t/2.
DispersionScanReport dispersion_scan(double beta, const std::vector<double>& t_grid, int n_env,
                                     const SmcConfig& config, SeedKey key);

}  // namespace polymer
