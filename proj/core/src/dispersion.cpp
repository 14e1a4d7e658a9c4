#include "polymer/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "polymer/parallel.hpp"
#include "polymer/stats.hpp"

namespace polymer {

EmpiricalMeasure2D::EmpiricalMeasure2D(std::vector<double> xs, std::vector<double> ys,
                                       std::vector<double> ws)
    : x(std::move(xs)), y(std::move(ys)), w(std::move(ws)) {
    if (x.size() != y.size() || x.size() != w.size())
        throw std::invalid_argument("EmpiricalMeasure2D: size mismatch");
    double total = 0.0;
    for (double v : w) {
        if (v < 0.0) throw std::invalid_argument("EmpiricalMeasure2D: negative weight");
        total += v;
    }
    if (total <= 0.0) throw std::invalid_argument("EmpiricalMeasure2D: zero total weight");
    for (double& v : w) v /= total;
}

namespace {

constexpr double kBoxHalf = 2.5;
constexpr double kBoxShift = 7.0;

struct CellGrid {
    double h = 0.5;
    long x0 = 0, y0 = 0;  // cell coordinates of the origin cell
    long nx = 0, ny = 0;
    std::vector<double> prefix;  // (nx+1) * (ny+1)

    [[nodiscard]] double rect(long ax, long ay, long bx, long by) const {
        // mass of cells [ax, bx) x [ay, by), clipped
        ax = std::clamp(ax - x0, 0L, nx);
        bx = std::clamp(bx - x0, 0L, nx);
        ay = std::clamp(ay - y0, 0L, ny);
        by = std::clamp(by - y0, 0L, ny);
        if (bx <= ax || by <= ay) return 0.0;
        auto at = [&](long i, long j) {
            return prefix[static_cast<std::size_t>(i) * static_cast<std::size_t>(ny + 1) +
                          static_cast<std::size_t>(j)];
        };
        return at(bx, by) - at(ax, by) - at(bx, ay) + at(ax, ay);
    }
};

CellGrid build_grid(const EmpiricalMeasure2D& m, double h) {
    CellGrid g;
    g.h = h;
    auto cell = [&](double v) { return static_cast<long>(std::floor(v / h)); };
    long min_x = cell(m.x[0]), max_x = min_x, min_y = cell(m.y[0]), max_y = min_y;
    for (std::size_t i = 0; i < m.size(); ++i) {
        min_x = std::min(min_x, cell(m.x[i]));
        max_x = std::max(max_x, cell(m.x[i]));
        min_y = std::min(min_y, cell(m.y[i]));
        max_y = std::max(max_y, cell(m.y[i]));
    }
    g.x0 = min_x;
    g.y0 = min_y;
    g.nx = max_x - min_x + 1;
    g.ny = max_y - min_y + 1;
    std::vector<double> mass(static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(g.ny), 0.0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        auto ix = static_cast<std::size_t>(cell(m.x[i]) - g.x0);
        auto iy = static_cast<std::size_t>(cell(m.y[i]) - g.y0);
        mass[ix * static_cast<std::size_t>(g.ny) + iy] += m.w[i];
    }
    g.prefix.assign(static_cast<std::size_t>(g.nx + 1) * static_cast<std::size_t>(g.ny + 1), 0.0);
    for (long i = 0; i < g.nx; ++i) {
        for (long j = 0; j < g.ny; ++j) {
            auto at = [&](long a, long b) -> double& {
                return g.prefix[static_cast<std::size_t>(a) * static_cast<std::size_t>(g.ny + 1) +
                                static_cast<std::size_t>(b)];
            };
            at(i + 1, j + 1) = mass[static_cast<std::size_t>(i) * static_cast<std::size_t>(g.ny) +
                                    static_cast<std::size_t>(j)] +
                               at(i, j + 1) + at(i + 1, j) - at(i, j);
        }
    }
    return g;
}

}  // namespace

DispersionReport dispersion(const EmpiricalMeasure2D& measure, int p, double grid_step) {
    if (measure.size() == 0) throw std::invalid_argument("dispersion: empty measure");
    if (p < 0) throw std::invalid_argument("dispersion: p >= 0 required");
    if (grid_step <= 0.0 || grid_step > 0.5)
        throw std::invalid_argument("dispersion: grid_step in (0, 1/2] required");
    const double cells_per_half = kBoxHalf / grid_step;
    const double cells_per_shift = kBoxShift / grid_step;
    if (std::abs(cells_per_half - std::round(cells_per_half)) > 1e-9 ||
        std::abs(cells_per_shift - std::round(cells_per_shift)) > 1e-9)
        throw std::invalid_argument("dispersion: grid_step must divide the box geometry");
    const long half = static_cast<long>(std::llround(cells_per_half));
    const long shift = static_cast<long>(std::llround(cells_per_shift));

    const CellGrid grid = build_grid(measure, grid_step);
    DispersionReport rep;
    rep.p = p;
    rep.grid_step = grid_step;

    const long p_span = shift * static_cast<long>(p);
    long best_gx = 0, best_gy = 0;
    double best = -1.0;
    for (long gx = grid.x0 - p_span - half; gx < grid.x0 + grid.nx + half; ++gx) {
        for (long gy = grid.y0 - p_span - half; gy < grid.y0 + grid.ny + half; ++gy) {
            double worst = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= p; ++i) {
                long cx = gx + shift * static_cast<long>(i);
                long cy = gy + shift * static_cast<long>(i);
                double mass = grid.rect(cx - half, cy - half, cx + half, cy + half);
                worst = std::min(worst, mass);
                if (worst == 0.0) break;
            }
            if (worst > best) {
                best = worst;
                best_gx = gx;
                best_gy = gy;
            }
        }
    }
    rep.value = std::max(best, 0.0);
    rep.x_star = static_cast<double>(best_gx) * grid_step;
    rep.y_star = static_cast<double>(best_gy) * grid_step;
    for (int i = 0; i <= p; ++i) {
        long cx = best_gx + shift * static_cast<long>(i);
        long cy = best_gy + shift * static_cast<long>(i);
        double outer = grid.rect(cx - half - 1, cy - half - 1, cx + half + 1, cy + half + 1);
        double inner = grid.rect(cx - half + 1, cy - half + 1, cx + half - 1, cy + half - 1);
        rep.boundary_loss += outer - inner;
    }
    return rep;
}

MidpointSample sample_midpoint_measure(const Environment& env, double beta, double r, double s,
                                       double t, const SmcConfig& config, SeedKey key) {
    if (!(1.0 <= r && r <= s && s <= t))
        throw std::invalid_argument("sample_midpoint_measure: need 1 <= r <= s <= t");
    MidpointSample out;
    const Environment* target = &env;
    Environment stripped(env.dim(), env.window());
    if (s > r) {
        stripped = env.restrict(IntervalSet(r, s).complement(env.window().t_max));
        target = &stripped;
    }
    SmcOptions opts;
    opts.modified = true;
    opts.use_truncation = true;
    opts.record_midpoints = true;
    opts.midpoint_r = r;
    opts.midpoint_s = s;
    SmcResult res = estimate_partition_smc(*target, beta, t, config, key, opts);
    if (res.extinct) {
        out.extinct = true;
        return out;
    }
    out.measure = EmpiricalMeasure2D(std::move(res.midpoint_x), std::move(res.midpoint_y),
                                     std::move(res.midpoint_w));
    out.distinct_ancestors = res.distinct_ancestors;
    out.ess = res.midpoint_ess;
    return out;
}

DispersionScanReport dispersion_scan(double beta, const std::vector<double>& t_grid, int n_env,
                                     const SmcConfig& config, SeedKey key) {
    DispersionScanReport rep;
    std::vector<double> log_t, mean_log;
    for (double t : t_grid) {
        const double r = t / 2.0;
        const Window window = window_for_horizon(t, 1);
        const auto tag = static_cast<std::uint64_t>(std::llround(t * 1024.0));
        const auto ne = static_cast<std::size_t>(n_env);
        std::vector<double> m0(ne, 0.0), m2(ne, 0.0), ess(ne, 0.0);
        std::vector<char> skip(ne, 0);
        parallel_for(ne, [&](std::size_t e) {
            Environment env = Environment::sample(window, 1, key.child("env").child(tag).child(e));
            MidpointSample ms = sample_midpoint_measure(env, beta, r, r, t, config,
                                                        key.child("smc").child(tag).child(e));
            if (ms.extinct) {
                skip[e] = 1;
                return;
            }
            m0[e] = dispersion(ms.measure, 0).value;
            m2[e] = dispersion(ms.measure, 2).value;
            ess[e] = ms.ess;
        });
        DispersionScanPoint pt;
        pt.t = t;
        const double resolution =
            0.5 / (static_cast<double>(config.n_particles) * static_cast<double>(config.n_islands));
        MeanVar mv, essv;
        double min_m0 = std::numeric_limits<double>::infinity();
        int floored = 0, kept = 0;
        for (std::size_t e = 0; e < ne; ++e) {
            if (skip[e]) continue;
            ++kept;
            min_m0 = std::min(min_m0, m0[e]);
            double v = m2[e];
            if (v < resolution) {
                v = resolution;
                ++floored;
            }
            mv.add(std::abs(std::log(v)));
            essv.add(ess[e]);
        }
        if (kept == 0) throw std::runtime_error("particle budget insufficient");
        pt.n_env = kept;
        pt.mean_abs_log_m2 = mv.mean;
        pt.se_abs_log_m2 = mv.std_err();
        pt.floored_fraction = static_cast<double>(floored) / static_cast<double>(kept);
        pt.min_m0 = min_m0;
        pt.min_m0_t4 = min_m0 * std::pow(t, 4.0);
        pt.min_m0_t2 = min_m0 * std::pow(t, 2.0);
        pt.mean_ess = essv.mean;
        rep.points.push_back(pt);
        log_t.push_back(std::log(t));
        mean_log.push_back(pt.mean_abs_log_m2);
    }
    if (log_t.size() >= 2) {
        LineFit f = ols_line(log_t, mean_log);
        rep.log_fit_intercept = f.intercept;
        rep.log_fit_slope = f.slope;
    }
    return rep;
}

}  // namespace polymer
