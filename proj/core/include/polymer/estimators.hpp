#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polymer/environment.hpp"
#include "polymer/path.hpp"
#include "polymer/rng.hpp"

namespace polymer {

struct SeedProvenance {
    std::uint64_t master = 0;
    std::string purpose;
};

struct Estimate {
    double value = 0.0;
    double std_err = 0.0;
    std::uint64_t n = 0;
    SeedProvenance seed;
};

// Exact environment average of Z (the field count in the path tube is
// Poisson(t) for every path): exp(-t (1 - e^{-beta})), exp(-t) at beta = inf.
double annealed_partition(double beta, double t);

struct CrudeOptions {
    bool modified = false;
    bool use_truncation = false;
};

// Plain Monte Carlo mean of per-path survival weights.
Estimate estimate_partition_crude(const Environment& env, double beta, double t,
                                  std::uint64_t n_paths, SeedKey key, CrudeOptions opts = {});

struct SmcConfig {
    int n_particles = 4096;      // per island
    int n_islands = 8;           // independent replicates for the standard error
    double slab_length = 1.0;    // aligned to the integer checkpoints
    double ess_threshold = 0.5;  // resample when ESS < threshold * N
    std::string resampling = "systematic";
};

struct SmcOptions {
    bool modified = true;
    bool use_truncation = true;
    // When set, retain each particle's ancestral positions at the two times
    // (must coincide with slab boundaries).
    bool record_midpoints = false;
    double midpoint_r = 0.0;
    double midpoint_s = 0.0;
};

struct SmcResult {
    Estimate estimate;                // linear-domain value across islands
    double log_value = 0.0;           // log of the pooled estimate
    bool extinct = false;             // every island lost all particles
    int islands_extinct = 0;
    std::vector<double> island_log;   // log estimate per island (-inf if extinct)
    double min_ess_fraction = 1.0;    // smallest ESS/N seen before resampling
    // Midpoint genealogy output (weights sum to 1 across surviving particles).
    std::vector<double> midpoint_x, midpoint_y, midpoint_w;
    std::uint64_t distinct_ancestors = 0;
    double midpoint_ess = 0.0;
};

// Slab-by-slab particle estimate of Z: within each slab the particles are
// propagated exactly (Gaussian endpoint plus Brownian-bridge interpolation at
// the disaster times that could be reached), weights pick up the slab
// survival factor, and the population is resampled systematically when the
// effective sample size drops below the threshold. The product of slab mean
// weights is an unbiased estimator of Z.
SmcResult estimate_partition_smc(const Environment& env, double beta, double t,
                                 const SmcConfig& config, SeedKey key, SmcOptions opts = {});

}  // namespace polymer
