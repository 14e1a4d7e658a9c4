#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "polymer/environment.hpp"
#include "polymer/stats.hpp"

using namespace polymer;

namespace {

Window box_window(double t_max, double half) {
    Window w;
    w.t_max = t_max;
    w.box = {{-half, half}};
    return w;
}

Environment make_env(double t_max, double half, std::vector<std::pair<double, double>> pts) {
    std::vector<Disaster> ds;
    for (auto [t, x] : pts) ds.push_back({t, {x}});
    return Environment(1, box_window(t_max, half), std::move(ds));
}

}  // namespace

TEST_CASE("unit-volume ball radius") {
    CHECK(TubeGeometry::for_dim(1).ball_radius == doctest::Approx(0.5).epsilon(1e-14));
    for (int d = 1; d <= 5; ++d) {
        double r = TubeGeometry::for_dim(d).ball_radius;
        double vol = std::pow(std::numbers::pi, d / 2.0) * std::pow(r, d) /
                     std::tgamma(d / 2.0 + 1.0);
        CHECK(vol == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("zero-volume window yields the empty environment") {
    auto env = Environment::sample(box_window(0.0, 5.0), 1, SeedKey{1});
    CHECK(env.size() == 0);
}

TEST_CASE("sampling determinism") {
    auto w = box_window(10.0, 5.0);
    auto a = Environment::sample(w, 1, SeedKey{99}.child("env").child(3));
    auto b = Environment::sample(w, 1, SeedKey{99}.child("env").child(3));
    CHECK(a == b);
    auto c = Environment::sample(w, 1, SeedKey{99}.child("env").child(4));
    CHECK(!(a == c));
}

TEST_CASE("poisson count mean over many seeds") {
    auto w = box_window(10.0, 5.0);  // volume 100
    MeanVar mv;
    for (std::uint64_t i = 0; i < 10000; ++i)
        mv.add(static_cast<double>(Environment::sample(w, 1, SeedKey{7}.child(i)).size()));
    CHECK(std::abs(mv.mean - 100.0) < 3.0);
    CHECK(std::abs(mv.mean - 100.0) < 3.0 * mv.std_err() + 0.5);
}

TEST_CASE("count distribution passes chi-square against Poisson(volume)") {
    auto w = box_window(5.0, 0.5);  // volume 5
    std::vector<double> observed(16, 0.0), expected(16, 0.0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        auto k = Environment::sample(w, 1, SeedKey{8}.child(static_cast<std::uint64_t>(i))).size();
        observed[std::min<std::size_t>(k, 15)] += 1.0;
    }
    double p = std::exp(-5.0), tail = 1.0;
    for (int k = 0; k < 15; ++k) {
        expected[static_cast<std::size_t>(k)] = p * n;
        tail -= p;
        p *= 5.0 / (k + 1);
    }
    expected[15] = tail * n;
    CHECK(chi_square_gof(observed, expected).p_value > 0.01);
}

TEST_CASE("restrict by intervals") {
    auto env = make_env(3.0, 5.0, {{0.5, 0.0}, {1.5, 0.0}});
    SUBCASE("full window is the identity") {
        CHECK(env.restrict(IntervalSet(0.0, 3.0)) == env);
    }
    SUBCASE("interval membership") {
        auto r = env.restrict(IntervalSet(1.0, 2.0));
        REQUIRE(r.size() == 1);
        CHECK(r.time(0) == 1.5);
    }
    SUBCASE("complement removes the early stripe") {
        auto r = env.restrict(IntervalSet(0.0, 1.0).complement(3.0));
        REQUIRE(r.size() == 1);
        CHECK(r.time(0) == 1.5);
    }
    SUBCASE("window is unchanged") {
        CHECK(env.restrict(IntervalSet(1.0, 2.0)).window().t_max == 3.0);
    }
}

TEST_CASE("restrict composes through intersection") {
    auto env = Environment::sample(box_window(10.0, 3.0), 1, SeedKey{21});
    IntervalSet a;
    a.add(0.0, 2.0);
    a.add(5.0, 9.0);
    IntervalSet b;
    b.add(1.0, 6.0);
    auto lhs = env.restrict(a.intersect(b));
    auto rhs = env.restrict(a).restrict(b);
    CHECK(lhs == rhs);
    CHECK(lhs.size() <= env.size());
}

TEST_CASE("shift arithmetic and round trip") {
    auto env = make_env(4.0, 10.0, {{2.0, 3.0}});
    std::vector<double> dx = {3.0};
    auto s = env.shift(1.0, dx);
    REQUIRE(s.size() == 1);
    CHECK(s.time(0) == doctest::Approx(1.0));
    CHECK(s.position(0)[0] == doctest::Approx(0.0));

    std::vector<double> zero = {0.0};
    CHECK(env.shift(0.0, zero) == env);

    std::vector<double> back = {-3.0};
    CHECK(s.shift(-1.0, back) == env);
}

TEST_CASE("shift preserves the law inside a probe box") {
    // Counts in a fixed interior region, with and without a (dt, dx) shift of
    // fresh environments: both are Poisson with the probe volume.
    auto w = box_window(10.0, 8.0);
    std::vector<double> plain_counts, shifted_counts;
    std::vector<double> dx = {2.5};
    for (std::uint64_t i = 0; i < 400; ++i) {
        auto env = Environment::sample(w, 1, SeedKey{31}.child("a").child(i));
        auto env2 = Environment::sample(w, 1, SeedKey{31}.child("b").child(i)).shift(2.0, dx);
        auto probe = [](const Environment& e) {
            double c = 0.0;
            for (std::size_t k = 0; k < e.size(); ++k)
                if (e.time(k) < 4.0 && std::abs(e.position(k)[0]) < 2.0) c += 1.0;
            return c;
        };
        plain_counts.push_back(probe(env));
        shifted_counts.push_back(probe(env2));
    }
    CHECK(ks_two_sample(plain_counts, shifted_counts).p_value > 0.01);
}

TEST_CASE("stripe resampling") {
    auto w = box_window(8.0, 2.0);
    auto env = Environment::sample(w, 1, SeedKey{41});
    auto res = env.resample_stripe(3.0, SeedKey{41}.child("fresh"));
    SUBCASE("disasters outside the stripe are identical") {
        auto keep = IntervalSet(3.0, 4.0).complement(8.0);
        CHECK(env.restrict(keep) == res.restrict(keep));
    }
    SUBCASE("stripe counts have the right mean") {
        MeanVar mv;
        for (std::uint64_t i = 0; i < 10000; ++i) {
            auto r = env.resample_stripe(3.0, SeedKey{42}.child(i));
            double c = 0.0;
            for (std::size_t k = 0; k < r.size(); ++k)
                if (r.time(k) >= 3.0 && r.time(k) < 4.0) c += 1.0;
            mv.add(c);
        }
        CHECK(std::abs(mv.mean - 4.0) < 3.0 * mv.std_err());
    }
    SUBCASE("removing the stripe empties it") {
        auto removed = env.remove_stripe(3.0);
        for (std::size_t k = 0; k < removed.size(); ++k)
            CHECK((removed.time(k) < 3.0 || removed.time(k) >= 4.0));
    }
}

TEST_CASE("json round trip") {
    auto env = make_env(4.0, 10.0, {{2.0, 3.0}, {0.25, -1.5}});
    auto back = Environment::from_json(env.to_json());
    CHECK(back == env);
    CHECK(env.to_json().find("\"dimension\"") != std::string::npos);
    CHECK(env.to_json().find("\"disasters\"") != std::string::npos);
}

TEST_CASE("disasters stay sorted by time with lexicographic ties") {
    auto env = make_env(4.0, 10.0, {{2.0, 3.0}, {2.0, -1.0}, {1.0, 5.0}});
    REQUIRE(env.size() == 3);
    CHECK(env.time(0) == 1.0);
    CHECK(env.time(1) == 2.0);
    CHECK(env.position(1)[0] == -1.0);
    CHECK(env.position(2)[0] == 3.0);
}

TEST_CASE("window sized from the horizon covers the truncation range") {
    auto w = window_for_horizon(5.0, 1);
    CHECK(w.t_max == 5.0);
    CHECK(w.box[0][1] == doctest::Approx(25.5));
}
