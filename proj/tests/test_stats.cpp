#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "polymer/rng.hpp"
#include "polymer/stats.hpp"

using namespace polymer;

TEST_CASE("normal cdf values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(normal_cdf(0.5) == doctest::Approx(0.691462461274013).epsilon(1e-9));
    CHECK(normal_cdf(-1.96) == doctest::Approx(0.024997895).epsilon(1e-5));
    for (double x : {-2.0, -0.3, 0.1, 1.7}) {
        CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-6));
    }
}

TEST_CASE("log normal tail matches the cdf in the overlap region") {
    for (double x : {0.0, 1.0, 4.0, 7.9, 8.1, 12.0}) {
        double direct = std::log(0.5 * std::erfc(x / std::numbers::sqrt2));
        CHECK(log_normal_tail(x) == doctest::Approx(direct).epsilon(1e-6));
    }
    // far tail: leading order is -x^2/2
    CHECK(log_normal_tail(40.0) == doctest::Approx(-804.60).epsilon(1e-3));
}

TEST_CASE("log normal interval") {
    CHECK(log_normal_interval(-1.0, 1.0, 0.0, 1.0) ==
          doctest::Approx(std::log(2.0 * normal_cdf(1.0) - 1.0)).epsilon(1e-10));
    // deep tail interval: dominated by the near edge
    double l = log_normal_interval(20.0, 21.0, 0.0, 1.0);
    CHECK(l == doctest::Approx(log_normal_tail(20.0)).epsilon(1e-4));
    // symmetric under reflection
    CHECK(log_normal_interval(-21.0, -20.0, 0.0, 1.0) == doctest::Approx(l).epsilon(1e-12));
}

TEST_CASE("truncated normal sampling matches the conditional law") {
    RngStream rng(SeedKey{15}.child("tn"));
    SUBCASE("central interval") {
        std::vector<double> xs;
        for (int i = 0; i < 40000; ++i) xs.push_back(truncated_normal(rng, -1.0, 0.5, 0.0, 1.0));
        double z = normal_cdf(0.5) - normal_cdf(-1.0);
        auto gof = ks_test(xs, [&](double x) { return (normal_cdf(x) - normal_cdf(-1.0)) / z; });
        CHECK(gof.p_value > 0.01);
        for (double x : xs) CHECK((x >= -1.0 && x <= 0.5));
    }
    SUBCASE("far tail interval stays in range") {
        MeanVar mv;
        for (int i = 0; i < 20000; ++i) {
            double x = truncated_normal(rng, 30.0, 31.0, 0.0, 1.0);
            REQUIRE(x >= 30.0);
            REQUIRE(x <= 31.0);
            mv.add(x);
        }
        // conditional density ~ exp(-30 (x - 30)): mean about 30 + 1/30
        CHECK(mv.mean == doctest::Approx(30.0 + 1.0 / 30.0).epsilon(2e-4));
    }
    SUBCASE("lower tail mirrors the upper tail") {
        double x = truncated_normal(rng, -31.0, -30.0, 0.0, 1.0);
        CHECK((x >= -31.0 && x <= -30.0));
    }
}

TEST_CASE("incomplete gamma against factorial identities") {
    // P(1, x) = 1 - e^-x
    CHECK(gamma_p(1.0, 2.0) == doctest::Approx(1.0 - std::exp(-2.0)).epsilon(1e-12));
    // chi-square with 2 dof: sf(x) = e^{-x/2}
    CHECK(chi_square_sf(3.0, 2.0) == doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
    // Gamma(3, 7) cdf via the Poisson sum
    double x = 0.4, rate = 7.0;
    double direct = 1.0 - std::exp(-rate * x) * (1.0 + rate * x + rate * x * rate * x / 2.0);
    CHECK(gamma_cdf(3.0, rate, x) == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("ks test accepts its own law and rejects another") {
    RngStream rng(SeedKey{11}.child("ks"));
    std::vector<double> data;
    for (int i = 0; i < 20000; ++i) data.push_back(rng.exponential(2.0));
    auto ok = ks_test(data, [](double x) { return 1.0 - std::exp(-2.0 * x); });
    CHECK(ok.p_value > 0.01);
    auto bad = ks_test(data, [](double x) { return 1.0 - std::exp(-1.5 * x); });
    CHECK(bad.p_value < 1e-6);
}

TEST_CASE("two-sample ks") {
    RngStream rng(SeedKey{12}.child("ks2"));
    std::vector<double> a, b, c;
    for (int i = 0; i < 20000; ++i) {
        a.push_back(rng.gaussian());
        b.push_back(rng.gaussian());
        c.push_back(rng.gaussian() * 1.2);
    }
    CHECK(ks_two_sample(a, b).p_value > 0.01);
    CHECK(ks_two_sample(a, c).p_value < 1e-4);
}

TEST_CASE("weighted line fit recovers exact models") {
    std::vector<double> x, y, sig;
    for (double t : {8.0, 16.0, 32.0, 64.0}) {
        x.push_back(1.0 / std::sqrt(t));
        y.push_back(-2.0 + 0.7 / std::sqrt(t));
        sig.push_back(0.01);
    }
    auto f = wls_line(x, y, sig);
    CHECK(f.intercept == doctest::Approx(-2.0).epsilon(1e-10));
    CHECK(f.slope == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(f.chi2 == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("pearson r on correlated pairs") {
    RngStream rng(SeedKey{13}.child("r"));
    std::vector<double> xs, ys, zs;
    for (int i = 0; i < 50000; ++i) {
        double x = rng.gaussian();
        xs.push_back(x);
        ys.push_back(x + 0.5 * rng.gaussian());
        zs.push_back(rng.gaussian());
    }
    CHECK(pearson_r(xs, ys) > 0.8);
    CHECK(std::abs(pearson_r(xs, zs)) < 0.02);
}

TEST_CASE("bootstrap sd interval brackets the truth") {
    RngStream rng(SeedKey{14}.child("b"));
    std::vector<double> xs;
    for (int i = 0; i < 400; ++i) xs.push_back(3.0 * rng.gaussian());
    auto ci = bootstrap_sd_ci(xs, 400, 0.95, SeedKey{14}.child("ci"));
    CHECK(ci.lo < 3.0);
    CHECK(ci.hi > 3.0);
    CHECK(ci.lo > 2.0);
    CHECK(ci.hi < 4.0);
}
