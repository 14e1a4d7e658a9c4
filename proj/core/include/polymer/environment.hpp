#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "polymer/rng.hpp"

namespace polymer {

// Finite union of half-open time intervals [lo, hi), kept sorted and disjoint.
class IntervalSet {
  public:
    IntervalSet() = default;
    IntervalSet(double lo, double hi) { add(lo, hi); }

    void add(double lo, double hi);
    [[nodiscard]] bool contains(double t) const;
    [[nodiscard]] IntervalSet intersect(const IntervalSet& other) const;
    // Complement within [0, t_max).
    [[nodiscard]] IntervalSet complement(double t_max) const;
    [[nodiscard]] const std::vector<std::array<double, 2>>& pieces() const { return pieces_; }

  private:
    std::vector<std::array<double, 2>> pieces_;
};

struct Window {
    double t_max = 0.0;
    std::vector<std::array<double, 2>> box;  // per-coordinate [lo, hi]

    [[nodiscard]] double volume() const;
    [[nodiscard]] std::size_t dim() const { return box.size(); }
    [[nodiscard]] bool contains(double t, std::span<const double> x) const;
};

// Simulation window large enough that no disaster reachable under the
// |B(s) - B(0)| <= ceil(t)^2 truncation is missed.
Window window_for_horizon(double t, int dim);

// Radius of the d-dimensional ball of unit volume (1/2 in d = 1).
struct TubeGeometry {
    int dim = 1;
    double ball_radius = 0.5;

    static TubeGeometry for_dim(int dim);
};

struct Disaster {
    double time = 0.0;
    std::vector<double> position;
};

// A finite realization of the unit-intensity space-time Poisson field,
// sorted by time with lexicographic position tie-break. Immutable after
// construction; every operation returns a new value.
class Environment {
  public:
    Environment(int dim, Window window) : dim_(dim), window_(std::move(window)) {}
    Environment(int dim, Window window, std::vector<Disaster> disasters);

    static Environment sample(const Window& window, int dim, SeedKey key);

    [[nodiscard]] int dim() const { return dim_; }
    [[nodiscard]] const Window& window() const { return window_; }
    [[nodiscard]] std::size_t size() const { return times_.size(); }
    [[nodiscard]] double time(std::size_t i) const { return times_[i]; }
    [[nodiscard]] std::span<const double> position(std::size_t i) const {
        return {pos_.data() + i * static_cast<std::size_t>(dim_),
                static_cast<std::size_t>(dim_)};
    }
    [[nodiscard]] std::span<const double> times() const { return times_; }

    // Keep only disasters whose time lies in `keep`; window unchanged.
    [[nodiscard]] Environment restrict(const IntervalSet& keep) const;
    // Map (t, x) -> (t - dt, x - dx), dropping points that leave the window.
    [[nodiscard]] Environment shift(double dt, std::span<const double> dx) const;
    // Replace the disasters with time in [i, i+1) by a fresh Poisson sample.
    [[nodiscard]] Environment resample_stripe(double stripe_start, SeedKey key) const;
    // Drop the disasters with time in [r, r+1).
    [[nodiscard]] Environment remove_stripe(double stripe_start) const;

    [[nodiscard]] std::string to_json() const;
    static Environment from_json(const std::string& text);

    bool operator==(const Environment& other) const;

  private:
    void sort_and_validate();

    int dim_ = 1;
    Window window_;
    std::vector<double> times_;
    std::vector<double> pos_;  // row-major, size() * dim_
};

}  // namespace polymer
