#include "polymer/path.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace polymer {

PathSkeleton sample_skeleton(const Environment& env, double t, std::span<const double> start,
                             SeedKey key) {
    if (t > env.window().t_max) throw std::invalid_argument("sample_skeleton: window too small");
    if (start.size() != static_cast<std::size_t>(env.dim()))
        throw std::invalid_argument("sample_skeleton: start dimension mismatch");

    std::vector<double> times;
    times.reserve(env.size() + static_cast<std::size_t>(t) + 2);
    times.push_back(0.0);
    for (double k = 1.0; k <= t; k += 1.0) times.push_back(k);
    if (times.back() != t) times.push_back(t);
    for (std::size_t i = 0; i < env.size(); ++i) {
        double s = env.time(i);
        if (s < t) times.push_back(s);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());

    PathSkeleton sk;
    sk.dim = env.dim();
    sk.times = std::move(times);
    const std::size_t d = static_cast<std::size_t>(sk.dim);
    sk.values.resize(sk.times.size() * d);
    std::copy(start.begin(), start.end(), sk.values.begin());
    RngStream rng(key);
    for (std::size_t i = 1; i < sk.times.size(); ++i) {
        double sgap = std::sqrt(sk.times[i] - sk.times[i - 1]);
        for (std::size_t c = 0; c < d; ++c)
            sk.values[i * d + c] = sk.values[(i - 1) * d + c] + sgap * rng.gaussian();
    }
    return sk;
}

DeathClock DeathClock::draw(double beta, bool modified, SeedKey key) {
    if (beta < 0.0) throw std::invalid_argument("DeathClock: beta >= 0 required");
    RngStream rng(key);
    return DeathClock{beta, rng.exponential(1.0), modified};
}

SurvivalVerdict evaluate(const PathSkeleton& skeleton, const Environment& env,
                         const DeathClock& clock, double t) {
    if (skeleton.dim != env.dim()) throw std::invalid_argument("evaluate: dimension mismatch");
    const double r = TubeGeometry::for_dim(env.dim()).ball_radius;
    const double r2 = r * r;
    const std::size_t d = static_cast<std::size_t>(env.dim());
    const bool zero_temperature = std::isinf(clock.beta);

    SurvivalVerdict v;
    std::size_t j = 0;  // skeleton cursor
    for (std::size_t i = 0; i < env.size(); ++i) {
        double s = env.time(i);
        if (s >= t) break;
        while (j < skeleton.times.size() && skeleton.times[j] < s) ++j;
        if (j >= skeleton.times.size() || skeleton.times[j] != s)
            throw std::invalid_argument("evaluate: skeleton does not cover disaster times");
        if (clock.modified && s < 1.0) continue;
        auto b = skeleton.value(j);
        auto x = env.position(i);
        double dist2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double diff = b[c] - x[c];
            dist2 += diff * diff;
        }
        if (dist2 <= r2) {
            ++v.hit_count;
            if (std::isinf(v.death_time)) {
                if (zero_temperature || clock.beta * static_cast<double>(v.hit_count) >= clock.xi)
                    v.death_time = s;
            }
        }
    }
    if (zero_temperature) {
        v.weight = v.hit_count == 0 ? 1.0 : 0.0;
    } else {
        v.weight = std::exp(-clock.beta * static_cast<double>(v.hit_count));
    }
    return v;
}

bool check_truncation(const PathSkeleton& skeleton, double t, SeedKey key) {
    const double bound = std::ceil(t) * std::ceil(t);
    const std::size_t d = static_cast<std::size_t>(skeleton.dim);
    const std::size_t n = skeleton.times.size();
    auto b0 = skeleton.start();

    // Exact check at the sampled times (Euclidean norm).
    for (std::size_t i = 1; i < n; ++i) {
        auto b = skeleton.value(i);
        double dist2 = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            double diff = b[c] - b0[c];
            dist2 += diff * diff;
        }
        if (dist2 > bound * bound) return false;
    }

    // Per-gap excursion tests, one per coordinate and side.
    RngStream rng(key);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        double gap = skeleton.times[i + 1] - skeleton.times[i];
        for (std::size_t c = 0; c < d; ++c) {
            double v0 = skeleton.values[i * d + c] - b0[c];
            double v1 = skeleton.values[(i + 1) * d + c] - b0[c];
            double up = bridge_crossing_prob(bound - v0, bound - v1, gap);
            if (up > 0.0 && rng.uniform() < up) return false;
            double dn = bridge_crossing_prob(bound + v0, bound + v1, gap);
            if (dn > 0.0 && rng.uniform() < dn) return false;
        }
    }
    return true;
}

}  // namespace polymer
