#pragma once

#include "polymer/environment.hpp"

namespace polymer {

// Deterministic evaluation of the survival probability Z by propagating a
// density across the disaster times with Gaussian convolutions on a grid,
// applying the per-disaster kill factor (0 for beta = infinity, exp(-beta)
// otherwise) inside the kill ball. One dimension, at most `max_disasters`
// disasters, no path truncation. Accuracy is ~1e-6 at the default settings.
struct GridSpec {
    double step = 0.005;
    double pad_sigmas = 10.0;  // domain half-width = pad_sigmas * sqrt(t)
    int max_disasters = 6;
};

double oracle_survival_quadrature(const Environment& env, double beta, double t, bool modified,
                                  const GridSpec& spec = {});

// P(B stays in [-half_width, half_width] on [0, t] | B(0) = x0), by the
// Dirichlet eigenfunction expansion of the killed heat kernel.
double confinement_probability(double half_width, double t, double x0 = 0.0);

// P(B(s) in [y_lo, y_hi], B stays in [-half_width, half_width] on [0, s] | B(0) = x0).
double killed_transition_probability(double half_width, double s, double x0, double y_lo,
                                     double y_hi);

}  // namespace polymer
