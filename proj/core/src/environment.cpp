#include "polymer/environment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace polymer {

void IntervalSet::add(double lo, double hi) {
    if (!(hi > lo)) return;
    pieces_.push_back({lo, hi});
    std::sort(pieces_.begin(), pieces_.end());
    std::vector<std::array<double, 2>> merged;
    for (const auto& p : pieces_) {
        if (!merged.empty() && p[0] <= merged.back()[1]) {
            merged.back()[1] = std::max(merged.back()[1], p[1]);
        } else {
            merged.push_back(p);
        }
    }
    pieces_ = std::move(merged);
}

bool IntervalSet::contains(double t) const {
    for (const auto& p : pieces_) {
        if (t >= p[0] && t < p[1]) return true;
        if (t < p[0]) break;
    }
    return false;
}

IntervalSet IntervalSet::intersect(const IntervalSet& other) const {
    IntervalSet out;
    for (const auto& a : pieces_) {
        for (const auto& b : other.pieces_) {
            double lo = std::max(a[0], b[0]);
            double hi = std::min(a[1], b[1]);
            if (hi > lo) out.add(lo, hi);
        }
    }
    return out;
}

IntervalSet IntervalSet::complement(double t_max) const {
    IntervalSet out;
    double cursor = 0.0;
    for (const auto& p : pieces_) {
        if (p[0] > cursor) out.add(cursor, std::min(p[0], t_max));
        cursor = std::max(cursor, p[1]);
        if (cursor >= t_max) break;
    }
    if (cursor < t_max) out.add(cursor, t_max);
    return out;
}

double Window::volume() const {
    double v = t_max;
    for (const auto& iv : box) v *= (iv[1] - iv[0]);
    return v;
}

bool Window::contains(double t, std::span<const double> x) const {
    if (t < 0.0 || t > t_max || x.size() != box.size()) return false;
    for (std::size_t c = 0; c < box.size(); ++c) {
        if (x[c] < box[c][0] || x[c] > box[c][1]) return false;
    }
    return true;
}

Window window_for_horizon(double t, int dim) {
    if (t < 0.0 || dim < 1) throw std::invalid_argument("window_for_horizon: bad arguments");
    double half = std::ceil(t) * std::ceil(t) + TubeGeometry::for_dim(dim).ball_radius;
    Window w;
    w.t_max = t;
    w.box.assign(static_cast<std::size_t>(dim), {-half, half});
    return w;
}

TubeGeometry TubeGeometry::for_dim(int dim) {
    if (dim < 1) throw std::invalid_argument("TubeGeometry: dim >= 1 required");
    // Unit volume: pi^{d/2} r^d / Gamma(d/2 + 1) = 1.
    double d = static_cast<double>(dim);
    double r = std::pow(std::tgamma(d / 2.0 + 1.0) / std::pow(std::numbers::pi, d / 2.0), 1.0 / d);
    return TubeGeometry{dim, r};
}

Environment::Environment(int dim, Window window, std::vector<Disaster> disasters)
    : dim_(dim), window_(std::move(window)) {
    times_.reserve(disasters.size());
    pos_.reserve(disasters.size() * static_cast<std::size_t>(dim));
    for (const auto& d : disasters) {
        if (d.position.size() != static_cast<std::size_t>(dim))
            throw std::invalid_argument("Environment: disaster dimension mismatch");
        if (!window_.contains(d.time, d.position))
            throw std::invalid_argument("Environment: disaster outside window");
        times_.push_back(d.time);
        pos_.insert(pos_.end(), d.position.begin(), d.position.end());
    }
    sort_and_validate();
}

void Environment::sort_and_validate() {
    const std::size_t n = times_.size();
    const std::size_t d = static_cast<std::size_t>(dim_);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto less = [&](std::size_t a, std::size_t b) {
        if (times_[a] != times_[b]) return times_[a] < times_[b];
        return std::lexicographical_compare(pos_.begin() + a * d, pos_.begin() + (a + 1) * d,
                                            pos_.begin() + b * d, pos_.begin() + (b + 1) * d);
    };
    std::sort(order.begin(), order.end(), less);
    std::vector<double> t2(n), p2(n * d);
    std::size_t out = 0;
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t i = order[k];
        if (out > 0 && times_[i] == t2[out - 1] &&
            std::equal(pos_.begin() + i * d, pos_.begin() + (i + 1) * d,
                       p2.begin() + (out - 1) * d)) {
            continue;  // exact duplicates cannot occur under the continuous law
        }
        t2[out] = times_[i];
        std::copy(pos_.begin() + i * d, pos_.begin() + (i + 1) * d, p2.begin() + out * d);
        ++out;
    }
    t2.resize(out);
    p2.resize(out * d);
    times_ = std::move(t2);
    pos_ = std::move(p2);
}

Environment Environment::sample(const Window& window, int dim, SeedKey key) {
    if (window.dim() != static_cast<std::size_t>(dim))
        throw std::invalid_argument("Environment::sample: window/dim mismatch");
    Environment env(dim, window);
    double vol = window.volume();
    if (vol <= 0.0) return env;
    RngStream rng(key);
    std::uint64_t n = rng.poisson(vol);
    env.times_.resize(n);
    env.pos_.resize(n * static_cast<std::size_t>(dim));
    for (std::uint64_t i = 0; i < n; ++i) {
        env.times_[i] = rng.uniform(0.0, window.t_max);
        for (int c = 0; c < dim; ++c) {
            env.pos_[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(c)] =
                rng.uniform(window.box[static_cast<std::size_t>(c)][0],
                            window.box[static_cast<std::size_t>(c)][1]);
        }
    }
    env.sort_and_validate();
    return env;
}

Environment Environment::restrict(const IntervalSet& keep) const {
    Environment out(dim_, window_);
    const std::size_t d = static_cast<std::size_t>(dim_);
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (keep.contains(times_[i])) {
            out.times_.push_back(times_[i]);
            out.pos_.insert(out.pos_.end(), pos_.begin() + i * d, pos_.begin() + (i + 1) * d);
        }
    }
    return out;
}

Environment Environment::shift(double dt, std::span<const double> dx) const {
    if (dx.size() != static_cast<std::size_t>(dim_))
        throw std::invalid_argument("Environment::shift: dx dimension mismatch");
    Environment out(dim_, window_);
    const std::size_t d = static_cast<std::size_t>(dim_);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < times_.size(); ++i) {
        double t = times_[i] - dt;
        for (std::size_t c = 0; c < d; ++c) x[c] = pos_[i * d + c] - dx[c];
        if (window_.contains(t, x)) {
            out.times_.push_back(t);
            out.pos_.insert(out.pos_.end(), x.begin(), x.end());
        }
    }
    out.sort_and_validate();
    return out;
}

Environment Environment::resample_stripe(double stripe_start, SeedKey key) const {
    if (stripe_start < 0.0 || stripe_start >= window_.t_max)
        throw std::invalid_argument("resample_stripe: stripe outside window");
    double lo = stripe_start, hi = std::min(stripe_start + 1.0, window_.t_max);
    Environment out = remove_stripe(stripe_start);
    double area = 1.0;
    for (const auto& iv : window_.box) area *= (iv[1] - iv[0]);
    RngStream rng(key);
    std::uint64_t n = rng.poisson((hi - lo) * area);
    const std::size_t d = static_cast<std::size_t>(dim_);
    for (std::uint64_t i = 0; i < n; ++i) {
        out.times_.push_back(rng.uniform(lo, hi));
        for (std::size_t c = 0; c < d; ++c)
            out.pos_.push_back(rng.uniform(window_.box[c][0], window_.box[c][1]));
    }
    out.sort_and_validate();
    return out;
}

Environment Environment::remove_stripe(double stripe_start) const {
    IntervalSet stripe(stripe_start, stripe_start + 1.0);
    return restrict(stripe.complement(std::max(window_.t_max, stripe_start + 1.0)));
}

std::string Environment::to_json() const {
    nlohmann::json j;
    j["dimension"] = dim_;
    j["window"]["t_max"] = window_.t_max;
    j["window"]["box"] = window_.box;
    auto& arr = j["disasters"] = nlohmann::json::array();
    const std::size_t d = static_cast<std::size_t>(dim_);
    for (std::size_t i = 0; i < times_.size(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        row.push_back(times_[i]);
        for (std::size_t c = 0; c < d; ++c) row.push_back(pos_[i * d + c]);
        arr.push_back(std::move(row));
    }
    return j.dump(2);
}

Environment Environment::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    int dim = j.at("dimension").get<int>();
    Window w;
    w.t_max = j.at("window").at("t_max").get<double>();
    w.box = j.at("window").at("box").get<std::vector<std::array<double, 2>>>();
    std::vector<Disaster> ds;
    for (const auto& row : j.at("disasters")) {
        Disaster d;
        d.time = row.at(0).get<double>();
        for (std::size_t c = 1; c < row.size(); ++c) d.position.push_back(row.at(c).get<double>());
        ds.push_back(std::move(d));
    }
    return Environment(dim, std::move(w), std::move(ds));
}

bool Environment::operator==(const Environment& other) const {
    return dim_ == other.dim_ && times_ == other.times_ && pos_ == other.pos_ &&
           window_.t_max == other.window_.t_max && window_.box == other.window_.box;
}

}  // namespace polymer
