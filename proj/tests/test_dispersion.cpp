#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "polymer/dispersion.hpp"
#include "polymer/stats.hpp"

using namespace polymer;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

EmpiricalMeasure2D point_mass(double x, double y) {
    return EmpiricalMeasure2D({x}, {y}, {1.0});
}

// dense uniform atoms on [0, side]^2
EmpiricalMeasure2D uniform_square(double side, double step) {
    std::vector<double> xs, ys, ws;
    for (double x = step / 2; x < side; x += step)
        for (double y = step / 2; y < side; y += step) {
            xs.push_back(x);
            ys.push_back(y);
            ws.push_back(1.0);
        }
    return EmpiricalMeasure2D(std::move(xs), std::move(ys), std::move(ws));
}

// independent oracle: exhaustive 1-d offset scan at a fine step, using exact
// interval-overlap masses of the uniform distribution on [0, side]
double uniform_m1_scan(double side) {
    double best = 0.0;
    for (double x = -2.5; x <= side + 2.5; x += 1e-3) {
        auto overlap = [&](double lo, double hi) {
            return std::max(0.0, std::min(hi, side) - std::max(lo, 0.0)) / side;
        };
        double m0 = overlap(x - 2.5, x + 2.5);
        double m1 = overlap(x + 4.5, x + 9.5);
        best = std::max(best, std::min(m0, m1));
    }
    return best * best;  // the two coordinates factor
}

}  // namespace

TEST_CASE("point mass unit cases") {
    auto m = point_mass(0.0, 0.0);
    CHECK(dispersion(m, 0).value == doctest::Approx(1.0));
    CHECK(dispersion(m, 1).value == doctest::Approx(0.0));
    CHECK(dispersion(m, 3).value == doctest::Approx(0.0));
}

TEST_CASE("uniform square against the scan oracle") {
    auto m = uniform_square(14.0, 0.02);
    double expected = uniform_m1_scan(14.0);
    CHECK(expected == doctest::Approx((5.0 / 14.0) * (5.0 / 14.0)).epsilon(1e-3));
    auto rep = dispersion(m, 1);
    CHECK(rep.value == doctest::Approx(expected).epsilon(0.02));
    CHECK(rep.value <= expected + 1e-9);  // lattice sup never exceeds the true sup
    CHECK(rep.boundary_loss > 0.0);
}

TEST_CASE("monotonicity in p") {
    auto m = uniform_square(21.0, 0.05);
    double prev = 2.0;
    for (int p = 0; p <= 3; ++p) {
        double v = dispersion(m, p).value;
        CHECK(v <= prev + 1e-12);
        prev = v;
    }
}

TEST_CASE("finer lattices only refine the sup") {
    RngStream rng(SeedKey{1});
    std::vector<double> xs, ys, ws;
    for (int i = 0; i < 4000; ++i) {
        xs.push_back(4.0 * rng.gaussian());
        ys.push_back(4.0 * rng.gaussian());
        ws.push_back(rng.uniform() + 0.1);
    }
    EmpiricalMeasure2D m(xs, ys, ws);
    for (int p : {0, 1, 2}) {
        double coarse = dispersion(m, p, 0.5).value;
        double fine = dispersion(m, p, 0.25).value;
        CHECK(fine >= coarse - 1e-12);
    }
}

TEST_CASE("translation covariance on lattice shifts") {
    RngStream rng(SeedKey{2});
    std::vector<double> xs, ys, ws;
    for (int i = 0; i < 2000; ++i) {
        xs.push_back(3.0 * rng.gaussian());
        ys.push_back(3.0 * rng.gaussian());
        ws.push_back(1.0);
    }
    EmpiricalMeasure2D m(xs, ys, ws);
    std::vector<double> xs2 = xs, ys2 = ys;
    for (double& v : xs2) v += 7.5;
    for (double& v : ys2) v -= 3.5;
    EmpiricalMeasure2D shifted(xs2, ys2, ws);
    for (int p : {0, 2}) {
        CHECK(dispersion(m, p).value == doctest::Approx(dispersion(shifted, p).value).epsilon(1e-12));
    }
}

TEST_CASE("splitting atoms leaves the value unchanged") {
    EmpiricalMeasure2D whole({0.0, 3.0}, {0.0, -1.0}, {0.5, 0.5});
    EmpiricalMeasure2D split({0.0, 0.0, 3.0, 3.0}, {0.0, 0.0, -1.0, -1.0},
                             {0.25, 0.25, 0.25, 0.25});
    for (int p : {0, 1}) {
        CHECK(dispersion(whole, p).value == doctest::Approx(dispersion(split, p).value));
    }
}

TEST_CASE("input validation") {
    CHECK_THROWS_AS(dispersion(EmpiricalMeasure2D(), 0), std::invalid_argument);
    auto m = point_mass(0.0, 0.0);
    CHECK_THROWS_AS(dispersion(m, -1), std::invalid_argument);
    CHECK_THROWS_AS(dispersion(m, 0, 0.6), std::invalid_argument);
    CHECK_THROWS_AS(dispersion(m, 0, 0.3), std::invalid_argument);  // does not divide 2.5 / 7
    CHECK_THROWS_AS(EmpiricalMeasure2D({0.0}, {0.0}, {-1.0}), std::invalid_argument);
}

TEST_CASE("midpoint measure at beta = 0 has the free Gaussian marginal") {
    auto env = Environment::sample(window_for_horizon(8.0, 1), 1, SeedKey{3});
    SmcConfig cfg;
    cfg.n_particles = 8192;
    cfg.n_islands = 2;
    auto ms = sample_midpoint_measure(env, 0.0, 4.0, 4.0, 8.0, cfg, SeedKey{4});
    REQUIRE(!ms.extinct);
    double total = 0.0, mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < ms.measure.size(); ++i) {
        total += ms.measure.w[i];
        mean += ms.measure.w[i] * ms.measure.x[i];
        CHECK(ms.measure.x[i] == ms.measure.y[i]);  // diagonal at r = s
    }
    for (std::size_t i = 0; i < ms.measure.size(); ++i) {
        double d = ms.measure.x[i] - mean;
        var += ms.measure.w[i] * d * d;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    double n_eff = ms.ess;
    CHECK(std::abs(mean) < 3.0 * std::sqrt(4.0 / n_eff));
    CHECK(var == doctest::Approx(4.0).epsilon(0.1));
    // no reweighting happened at beta = 0
    CHECK(ms.distinct_ancestors == ms.measure.size());
}

TEST_CASE("midpoint pairs split across r < s") {
    auto env = Environment::sample(window_for_horizon(6.0, 1), 1, SeedKey{5});
    SmcConfig cfg;
    cfg.n_particles = 2048;
    cfg.n_islands = 2;
    auto ms = sample_midpoint_measure(env, 0.0, 2.0, 4.0, 6.0, cfg, SeedKey{6});
    REQUIRE(!ms.extinct);
    // increments after time r are independent: Var(y - x) = s - r = 2
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < ms.measure.size(); ++i)
        mean += ms.measure.w[i] * (ms.measure.y[i] - ms.measure.x[i]);
    for (std::size_t i = 0; i < ms.measure.size(); ++i) {
        double d = ms.measure.y[i] - ms.measure.x[i] - mean;
        var += ms.measure.w[i] * d * d;
    }
    CHECK(std::abs(mean) < 0.15);
    CHECK(var == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("midpoint preconditions") {
    auto env = Environment::sample(window_for_horizon(4.0, 1), 1, SeedKey{7});
    SmcConfig cfg;
    CHECK_THROWS_AS(sample_midpoint_measure(env, 0.0, 0.5, 2.0, 4.0, cfg, SeedKey{8}),
                    std::invalid_argument);
    CHECK_THROWS_AS(sample_midpoint_measure(env, 0.0, 3.0, 2.0, 4.0, cfg, SeedKey{8}),
                    std::invalid_argument);
}

TEST_CASE("scan at beta = 0 tracks the Gaussian oracle") {
    SmcConfig cfg;
    cfg.n_particles = 8192;
    cfg.n_islands = 1;
    auto rep = dispersion_scan(0.0, {8.0, 16.0}, 12, cfg, SeedKey{9});
    REQUIRE(rep.points.size() == 2);
    for (const auto& pt : rep.points) {
        // oracle: |log M^2| of the diagonal N(0, t/2) law on the same lattice
        double sigma = std::sqrt(pt.t / 2.0);
        double best = 0.0;
        for (double x = -10.0 * sigma; x <= 10.0 * sigma; x += 0.5) {
            double worst = 1.0;
            for (int i = 0; i <= 2; ++i) {
                double lo = (x + 7.0 * i - 2.5) / sigma, hi = (x + 7.0 * i + 2.5) / sigma;
                worst = std::min(worst, normal_cdf(hi) - normal_cdf(lo));
            }
            best = std::max(best, worst);
        }
        double oracle = std::abs(std::log(best));
        CHECK(pt.mean_abs_log_m2 == doctest::Approx(oracle).epsilon(0.12));
        CHECK(pt.floored_fraction == 0.0);
        CHECK(pt.min_m0_t4 > 0.0);
    }
}
