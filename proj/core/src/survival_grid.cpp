#include "polymer/survival_grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace polymer {

namespace {

// Multiply the density by the kill factor around `center`, weighting the two
// boundary cells by their overlap with the kill ball so the grid never sees a
// misaligned jump.
void apply_kill_factor(std::vector<double>& f, double x_lo, double h, double center,
                       double radius, double factor) {
    const double a = center - radius;
    const double b = center + radius;
    const auto n = f.size();
    for (std::size_t i = 0; i < n; ++i) {
        double cell_lo = x_lo + (static_cast<double>(i) - 0.5) * h;
        double cell_hi = cell_lo + h;
        if (cell_hi <= a || cell_lo >= b) continue;
        double overlap = (std::min(cell_hi, b) - std::max(cell_lo, a)) / h;
        f[i] *= overlap * factor + (1.0 - overlap);
    }
}

void gaussian_propagate(std::vector<double>& f, double h, double dt) {
    if (dt <= 0.0) return;
    const double sigma = std::sqrt(dt);
    const int reach = static_cast<int>(std::ceil(8.0 * sigma / h));
    std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1));
    const double norm = h / (sigma * std::sqrt(2.0 * std::numbers::pi));
    for (int k = -reach; k <= reach; ++k) {
        double u = static_cast<double>(k) * h / sigma;
        kernel[static_cast<std::size_t>(k + reach)] = norm * std::exp(-0.5 * u * u);
    }
    const int n = static_cast<int>(f.size());
    std::vector<double> out(f.size(), 0.0);
    for (int i = 0; i < n; ++i) {
        double fi = f[static_cast<std::size_t>(i)];
        if (fi == 0.0) continue;
        int jlo = std::max(0, i - reach);
        int jhi = std::min(n - 1, i + reach);
        const double* kp = kernel.data() + (jlo - i + reach);
        double* op = out.data() + jlo;
        for (int j = jlo; j <= jhi; ++j) *op++ += fi * *kp++;
    }
    f = std::move(out);
}

}  // namespace

double oracle_survival_quadrature(const Environment& env, double beta, double t, bool modified,
                                  const GridSpec& spec) {
    if (env.dim() != 1) throw std::invalid_argument("oracle scale exceeded");
    if (beta < 0.0) throw std::invalid_argument("oracle: beta >= 0 required");
    if (beta == 0.0) return 1.0;

    std::vector<std::pair<double, double>> kills;  // (time, center)
    for (std::size_t i = 0; i < env.size(); ++i) {
        double s = env.time(i);
        if (s >= t) break;
        if (modified && s < 1.0) continue;
        kills.emplace_back(s, env.position(i)[0]);
    }
    if (static_cast<int>(kills.size()) > spec.max_disasters)
        throw std::invalid_argument("oracle scale exceeded");
    if (kills.empty()) return 1.0;

    const double radius = TubeGeometry::for_dim(1).ball_radius;
    const double factor = std::isinf(beta) ? 0.0 : std::exp(-beta);
    const double h = spec.step;
    const double half = spec.pad_sigmas * std::sqrt(t) + 1.0;
    const int n = 2 * static_cast<int>(std::ceil(half / h)) + 1;
    const double x_lo = -h * static_cast<double>(n / 2);

    // Start from a delta at the origin: propagate it analytically to the first
    // kill time, then step kill -> convolve -> kill ... and integrate.
    std::vector<double> f(static_cast<std::size_t>(n), 0.0);
    const double t0 = kills.front().first;
    const double s0 = std::sqrt(t0);
    for (int i = 0; i < n; ++i) {
        double x = x_lo + static_cast<double>(i) * h;
        f[static_cast<std::size_t>(i)] =
            h * std::exp(-0.5 * (x / s0) * (x / s0)) / (s0 * std::sqrt(2.0 * std::numbers::pi));
    }
    apply_kill_factor(f, x_lo, h, kills.front().second, radius, factor);
    for (std::size_t k = 1; k < kills.size(); ++k) {
        gaussian_propagate(f, h, kills[k].first - kills[k - 1].first);
        apply_kill_factor(f, x_lo, h, kills[k].second, radius, factor);
    }
    double z = 0.0;
    for (double v : f) z += v;
    return z;
}

double confinement_probability(double half_width, double t, double x0) {
    return killed_transition_probability(half_width, t, x0, -half_width, half_width);
}

double killed_transition_probability(double half_width, double s, double x0, double y_lo,
                                     double y_hi) {
    const double L = 2.0 * half_width;
    if (std::abs(x0) >= half_width) return 0.0;
    y_lo = std::max(y_lo, -half_width);
    y_hi = std::min(y_hi, half_width);
    if (y_hi <= y_lo) return 0.0;
    if (s <= 0.0) return (x0 >= y_lo && x0 <= y_hi) ? 1.0 : 0.0;
    const double pi = std::numbers::pi;
    double sum = 0.0;
    for (int k = 1; k <= 100000; ++k) {
        double kk = static_cast<double>(k);
        double lambda = kk * kk * pi * pi / (2.0 * L * L);
        double decay = std::exp(-lambda * s);
        if (decay < 1e-16 && k > 2) break;
        double phi_x0 = std::sin(kk * pi * (x0 + half_width) / L);
        // integral of sin(k pi (y + a)/L) over [y_lo, y_hi]
        double integral = (L / (kk * pi)) * (std::cos(kk * pi * (y_lo + half_width) / L) -
                                             std::cos(kk * pi * (y_hi + half_width) / L));
        sum += (2.0 / L) * phi_x0 * integral * decay;
    }
    return std::clamp(sum, 0.0, 1.0);
}

}  // namespace polymer
