#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "polymer/environment.hpp"
#include "polymer/rng.hpp"

namespace polymer {

// A Brownian path observed at the disaster times below the horizon, the
// integer checkpoints and the horizon itself. Positions are exact samples of
// the path at those times; nothing in between is materialized.
struct PathSkeleton {
    int dim = 1;
    std::vector<double> times;   // strictly increasing, times.front() == 0
    std::vector<double> values;  // row-major, times.size() * dim

    [[nodiscard]] std::span<const double> value(std::size_t i) const {
        return {values.data() + i * static_cast<std::size_t>(dim),
                static_cast<std::size_t>(dim)};
    }
    [[nodiscard]] std::span<const double> start() const { return value(0); }
};

PathSkeleton sample_skeleton(const Environment& env, double t, std::span<const double> start,
                             SeedKey key);

// Kill mechanism: death fires when beta * (hits so far) reaches the Exp(1)
// level xi; at beta = infinity the first hit kills. With `modified` set,
// disasters in the first unit time interval are ignored.
struct DeathClock {
    double beta = 0.0;
    double xi = 1.0;
    bool modified = false;

    static DeathClock draw(double beta, bool modified, SeedKey key);
};

struct SurvivalVerdict {
    std::uint64_t hit_count = 0;
    double weight = 1.0;
    double death_time = std::numeric_limits<double>::infinity();
    bool truncation_ok = true;
};

// Counts the disasters hit by the skeleton below the horizon and derives the
// survival weight and death time. The skeleton must contain every disaster
// time of `env` below t. A point exactly on the kill-ball boundary counts as
// a hit.
SurvivalVerdict evaluate(const PathSkeleton& skeleton, const Environment& env,
                         const DeathClock& clock, double t);

// One-sided probability that a Brownian bridge over a gap of length `gap`
// with endpoint clearances a0, a1 > 0 crosses the boundary.
inline double bridge_crossing_prob(double a0, double a1, double gap) {
    if (a0 <= 0.0 || a1 <= 0.0) return 1.0;
    double e = -2.0 * a0 * a1 / gap;
    return e < -60.0 ? 0.0 : std::exp(e);
}

// Truncation event: sup_{s <= t} |B(s) - B(0)| <= ceil(t)^2, decided from the
// skeleton values plus per-gap bridge crossing tests (per coordinate and side).
bool check_truncation(const PathSkeleton& skeleton, double t, SeedKey key);

}  // namespace polymer
