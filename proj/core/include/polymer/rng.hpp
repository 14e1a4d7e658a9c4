#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace polymer {

// 64-bit finalizer from SplitMix64 (Steele/Lea/Flood; constants due to Vigna).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Hierarchical stream key: every consumer of randomness derives its own key
// from the master seed via a chain of purpose tags and indices, so samples are
// reproducible and independent of scheduling.
struct SeedKey {
    std::uint64_t state = 0;

    [[nodiscard]] constexpr SeedKey child(std::uint64_t index) const noexcept {
        return SeedKey{mix64(state ^ mix64(index + kGolden))};
    }

    [[nodiscard]] constexpr SeedKey child(std::string_view tag) const noexcept {
        std::uint64_t h = 1469598103934665603ull;  // FNV-1a
        for (char c : tag) {
            h ^= static_cast<unsigned char>(c);
            h *= 1099511628211ull;
        }
        return SeedKey{mix64(state ^ mix64(h + kGolden))};
    }
};

// Counter-based generator: the n-th output is mix64(key + n*kGolden), i.e. a
// SplitMix64 sequence. No state is shared between streams with distinct keys.
class RngStream {
  public:
    explicit RngStream(SeedKey key) noexcept : key_(key.state) {}

    std::uint64_t next_u64() noexcept { return mix64(key_ + (++counter_) * kGolden); }

    // Uniform on [0, 1), 53-bit resolution.
    double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform on [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; second member of each pair is cached.
    double gaussian() noexcept {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // Exponential with given rate; strictly positive.
    double exponential(double rate) noexcept {
        double e;
        do {
            e = -std::log1p(-uniform());
        } while (e <= 0.0);
        return e / rate;
    }

    std::uint64_t poisson(double mean) noexcept {
        if (mean <= 0.0) return 0;
        if (mean < 30.0) return poisson_chopdown(mean);
        return poisson_ptrs(mean);
    }

  private:
    std::uint64_t poisson_chopdown(double mean) noexcept {
        const double limit = std::exp(-mean);
        std::uint64_t k = 0;
        double p = 1.0;
        do {
            ++k;
            p *= uniform();
        } while (p > limit);
        return k - 1;
    }

    // Hormann's PTRS transformed rejection, valid for mean >= 10.
    std::uint64_t poisson_ptrs(double mean) noexcept {
        const double slog = std::log(mean);
        const double b = 0.931 + 2.53 * std::sqrt(mean);
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double vr = 0.9277 - 3.6224 / (b - 2.0);
        while (true) {
            double u = uniform() - 0.5;
            double v = uniform();
            double us = 0.5 - std::abs(u);
            double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
            if (kf < 0.0) continue;
            if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
            if (us < 0.013 && v > us) continue;
            if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
                kf * slog - mean - std::lgamma(kf + 1.0)) {
                return static_cast<std::uint64_t>(kf);
            }
        }
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace polymer
