#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "polymer/rng.hpp"
#include "polymer/stats.hpp"

using namespace polymer;

TEST_CASE("streams are deterministic and keyed") {
    SeedKey master{42};
    RngStream a(master.child("x").child(3));
    RngStream b(master.child("x").child(3));
    RngStream c(master.child("x").child(4));
    bool identical = true, distinct = false;
    for (int i = 0; i < 100; ++i) {
        auto va = a.next_u64();
        if (va != b.next_u64()) identical = false;
        if (va != c.next_u64()) distinct = true;
    }
    CHECK(identical);
    CHECK(distinct);
}

TEST_CASE("tag and index derivations differ") {
    SeedKey master{7};
    CHECK(master.child("env").state != master.child("smc").state);
    CHECK(master.child(0).state != master.child(1).state);
    CHECK(master.child("env").child(5).state != master.child(5).child("env").state);
}

TEST_CASE("uniform moments") {
    RngStream rng(SeedKey{1}.child("u"));
    MeanVar mv;
    for (int i = 0; i < 200000; ++i) mv.add(rng.uniform());
    CHECK(std::abs(mv.mean - 0.5) < 0.005);
    CHECK(std::abs(mv.variance() - 1.0 / 12.0) < 0.002);
}

TEST_CASE("gaussian moments") {
    RngStream rng(SeedKey{2}.child("g"));
    MeanVar mv;
    double m4 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        double x = rng.gaussian();
        mv.add(x);
        m4 += x * x * x * x;
    }
    CHECK(std::abs(mv.mean) < 0.01);
    CHECK(std::abs(mv.variance() - 1.0) < 0.02);
    CHECK(std::abs(m4 / n - 3.0) < 0.1);
}

TEST_CASE("exponential is positive with the right mean") {
    RngStream rng(SeedKey{3}.child("e"));
    MeanVar mv;
    for (int i = 0; i < 200000; ++i) {
        double x = rng.exponential(7.0);
        REQUIRE(x > 0.0);
        mv.add(x);
    }
    CHECK(std::abs(mv.mean - 1.0 / 7.0) < 0.002);
}

TEST_CASE("poisson matches its law across the sampler switch") {
    for (double mean : {0.5, 4.0, 25.0, 80.0, 3000.0}) {
        RngStream rng(SeedKey{4}.child("p").child(static_cast<std::uint64_t>(mean * 10)));
        MeanVar mv;
        const int n = 60000;
        for (int i = 0; i < n; ++i) mv.add(static_cast<double>(rng.poisson(mean)));
        // mean and variance both equal `mean`; allow 5 sigma
        double tol = 5.0 * std::sqrt(mean / n);
        CHECK(std::abs(mv.mean - mean) < tol);
        CHECK(std::abs(mv.variance() - mean) < 0.1 * mean);
    }
}

TEST_CASE("poisson chi-square GOF") {
    const double mean = 5.0;
    const int n = 100000;
    RngStream rng(SeedKey{5}.child("gof"));
    std::vector<double> observed(21, 0.0), expected(21, 0.0);
    for (int i = 0; i < n; ++i) {
        auto k = rng.poisson(mean);
        observed[std::min<std::uint64_t>(k, 20)] += 1.0;
    }
    double p = std::exp(-mean);
    double tail = 1.0;
    for (int k = 0; k < 20; ++k) {
        expected[static_cast<std::size_t>(k)] = p * n;
        tail -= p;
        p *= mean / (k + 1);
    }
    expected[20] = std::max(tail, 0.0) * n;
    auto gof = chi_square_gof(observed, expected);
    CHECK(gof.p_value > 0.01);
}
