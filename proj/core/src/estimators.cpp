#include "polymer/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "polymer/stats.hpp"

namespace polymer {

double annealed_partition(double beta, double t) {
    if (t < 0.0 || beta < 0.0) throw std::invalid_argument("annealed_partition: bad arguments");
    if (std::isinf(beta)) return std::exp(-t);
    return std::exp(-t * (1.0 - std::exp(-beta)));
}

Estimate estimate_partition_crude(const Environment& env, double beta, double t,
                                  std::uint64_t n_paths, SeedKey key, CrudeOptions opts) {
    if (n_paths < 2) throw std::invalid_argument("estimate_partition_crude: n_paths >= 2");
    if (t > env.window().t_max)
        throw std::invalid_argument("estimate_partition_crude: window too small");
    std::vector<double> start(static_cast<std::size_t>(env.dim()), 0.0);
    MeanVar mv;
    for (std::uint64_t i = 0; i < n_paths; ++i) {
        SeedKey pk = key.child("path").child(i);
        PathSkeleton sk = sample_skeleton(env, t, start, pk.child("skeleton"));
        DeathClock clock = DeathClock::draw(beta, opts.modified, pk.child("xi"));
        SurvivalVerdict v = evaluate(sk, env, clock, t);
        double w = v.weight;
        if (opts.use_truncation && !check_truncation(sk, t, pk.child("trunc"))) w = 0.0;
        mv.add(w);
    }
    return {mv.mean, mv.std_err(), n_paths, {key.state, "crude"}};
}

namespace {

struct SlabEntry {
    double x0;
    double time;
    std::uint32_t idx;
};

bool crossing_fires(RngStream& rng, double a0, double a1, double gap) {
    double p = bridge_crossing_prob(a0, a1, gap);
    return p > 0.0 && rng.uniform() < p;
}

struct SlabIndex {
    std::vector<std::vector<SlabEntry>> slabs;
};

SlabIndex build_slab_index(const Environment& env, double t, double slab_len) {
    SlabIndex si;
    auto n_slabs = static_cast<std::size_t>(std::ceil(t / slab_len - 1e-12));
    if (n_slabs == 0) n_slabs = 1;
    si.slabs.resize(n_slabs);
    for (std::size_t i = 0; i < env.size(); ++i) {
        double s = env.time(i);
        if (s >= t) break;
        auto k = std::min(n_slabs - 1, static_cast<std::size_t>(s / slab_len));
        si.slabs[k].push_back({env.position(i)[0], s, static_cast<std::uint32_t>(i)});
    }
    for (auto& v : si.slabs)
        std::sort(v.begin(), v.end(), [](const SlabEntry& a, const SlabEntry& b) {
            if (a.x0 != b.x0) return a.x0 < b.x0;
            return a.time < b.time;
        });
    return si;
}

struct IslandResult {
    double log_z = -std::numeric_limits<double>::infinity();
    bool extinct = false;
    double min_ess_fraction = 1.0;
    std::vector<double> mid_x, mid_y, mid_w;
};

struct IslandScratch {
    std::vector<SlabEntry> cand;
    std::vector<double> times;
    std::vector<double> vals;
};

// Propagates one particle across [a, b] given the endpoint draw already in
// `v1`, sampling the path at every disaster time it could reach. Returns the
// number of hits; sets `truncation_violated` when the |B - B(0)| <= trunc_bound
// envelope fails. Disasters further than the pruning corridor from the chord
// cannot be hit unless the bridge leaves the corridor, which the per-gap
// crossing tests detect; such slabs are re-sampled with a wider corridor.
std::uint64_t propagate_slab(const Environment& env, const std::vector<SlabEntry>& entries,
                             double a, double b, const double* v0, double* v1, bool modified,
                             double trunc_bound, bool use_truncation, bool& truncation_violated,
                             RngStream& rng, IslandScratch& scratch, double kill_radius) {
    const int d = env.dim();
    const std::size_t dd = static_cast<std::size_t>(d);
    const double r2 = kill_radius * kill_radius;
    truncation_violated = false;

    double margin = 6.0;
    std::uint64_t hits = 0;
    for (int attempt = 0; attempt < 8; ++attempt) {
        const double lo = std::min(v0[0], v1[0]) - margin;
        const double hi = std::max(v0[0], v1[0]) + margin;

        scratch.cand.clear();
        auto it = std::lower_bound(entries.begin(), entries.end(), lo - kill_radius,
                                   [](const SlabEntry& e, double v) { return e.x0 < v; });
        for (; it != entries.end() && it->x0 <= hi + kill_radius; ++it) {
            if (modified && it->time < 1.0) continue;
            scratch.cand.push_back(*it);
        }
        std::sort(scratch.cand.begin(), scratch.cand.end(),
                  [](const SlabEntry& x, const SlabEntry& y) { return x.time < y.time; });

        scratch.times.clear();
        scratch.vals.clear();
        scratch.times.reserve(scratch.cand.size() + 2);
        scratch.vals.reserve((scratch.cand.size() + 2) * dd);
        scratch.times.push_back(a);
        scratch.vals.insert(scratch.vals.end(), v0, v0 + d);

        hits = 0;
        bool corridor_exit = false;
        double u_prev = a;
        std::size_t prev_base = 0;
        for (const SlabEntry& c : scratch.cand) {
            const double s = c.time;
            const double g1 = s - u_prev;
            const double g2 = b - s;
            const double span = b - u_prev;
            const double sd = std::sqrt(g1 * g2 / span);
            const std::size_t base = scratch.vals.size();
            for (int cd = 0; cd < d; ++cd) {
                double prev_cd = scratch.vals[prev_base + static_cast<std::size_t>(cd)];
                double mean = prev_cd + g1 * (v1[cd] - prev_cd) / span;
                scratch.vals.push_back(mean + sd * rng.gaussian());
            }
            const double val0 = scratch.vals[base];
            const double prev0 = scratch.vals[prev_base];
            // corridor exit at a sampled point, or detected inside the gap
            if (val0 < lo || val0 > hi || crossing_fires(rng, hi - prev0, hi - val0, g1) ||
                crossing_fires(rng, prev0 - lo, val0 - lo, g1)) {
                corridor_exit = true;
                break;
            }
            double dist2 = 0.0;
            auto x = env.position(c.idx);
            for (int cd = 0; cd < d; ++cd) {
                double diff = scratch.vals[base + static_cast<std::size_t>(cd)] - x[cd];
                dist2 += diff * diff;
            }
            if (dist2 <= r2) ++hits;
            scratch.times.push_back(s);
            u_prev = s;
            prev_base = base;
        }
        if (!corridor_exit) {
            double g1 = b - u_prev;
            const double prev0 = scratch.vals[prev_base];
            if (crossing_fires(rng, hi - prev0, hi - v1[0], g1) ||
                crossing_fires(rng, prev0 - lo, v1[0] - lo, g1)) {
                corridor_exit = true;
            }
        }
        if (!corridor_exit) {
            scratch.times.push_back(b);
            scratch.vals.insert(scratch.vals.end(), v1, v1 + d);
            break;
        }
        margin *= 2.0;
    }

    if (use_truncation) {
        const double bound2 = trunc_bound * trunc_bound;
        const std::size_t n = scratch.times.size();
        for (std::size_t i = 1; i < n && !truncation_violated; ++i) {
            double dist2 = 0.0;
            for (std::size_t cd = 0; cd < dd; ++cd) {
                double v = scratch.vals[i * dd + cd];
                dist2 += v * v;
            }
            if (dist2 > bound2) truncation_violated = true;
        }
        for (std::size_t i = 0; i + 1 < n && !truncation_violated; ++i) {
            double gap = scratch.times[i + 1] - scratch.times[i];
            for (std::size_t cd = 0; cd < dd && !truncation_violated; ++cd) {
                double p0 = scratch.vals[i * dd + cd];
                double p1 = scratch.vals[(i + 1) * dd + cd];
                double up = bridge_crossing_prob(trunc_bound - p0, trunc_bound - p1, gap);
                if (up > 0.0 && rng.uniform() < up) {
                    truncation_violated = true;
                    break;
                }
                double dn = bridge_crossing_prob(trunc_bound + p0, trunc_bound + p1, gap);
                if (dn > 0.0 && rng.uniform() < dn) {
                    truncation_violated = true;
                    break;
                }
            }
        }
    }
    return hits;
}

IslandResult run_island(const Environment& env, const SlabIndex& index, double beta, double t,
                        const SmcConfig& cfg, SeedKey island_key, const SmcOptions& opts) {
    const int d = env.dim();
    const std::size_t dd = static_cast<std::size_t>(d);
    const auto n = static_cast<std::size_t>(cfg.n_particles);
    const bool zero_temperature = std::isinf(beta);
    const double kill_radius = TubeGeometry::for_dim(d).ball_radius;
    const double trunc_bound = std::ceil(t) * std::ceil(t);

    IslandResult out;
    std::vector<double> pos(n * dd, 0.0), pos_next(n * dd, 0.0);
    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    std::vector<double> g(n);
    const bool record = opts.record_midpoints;
    std::vector<double> mid_x(record ? n : 0, 0.0), mid_y(record ? n : 0, 0.0);

    IslandScratch scratch;
    std::vector<double> endpoint(dd);
    std::vector<std::uint32_t> pick(n);
    std::vector<double> gathered(n * dd);

    double log_z = 0.0;
    const auto n_slabs = index.slabs.size();
    for (std::size_t k = 0; k < n_slabs; ++k) {
        const double a = static_cast<double>(k) * cfg.slab_length;
        const double b = std::min(t, a + cfg.slab_length);
        const double gap = b - a;
        SeedKey slab_key = island_key.child("slab").child(k);
        for (std::size_t i = 0; i < n; ++i) {
            if (weights[i] == 0.0) {
                g[i] = 0.0;
                continue;
            }
            RngStream rng(slab_key.child(i));
            const double* v0 = pos.data() + i * dd;
            double* v1 = pos_next.data() + i * dd;
            const double sgap = std::sqrt(gap);
            for (std::size_t cd = 0; cd < dd; ++cd) v1[cd] = v0[cd] + sgap * rng.gaussian();

            bool truncation_violated = false;
            double weight_factor;
            if (beta == 0.0) {
                // No kill factor; only the truncation envelope matters.
                if (opts.use_truncation) {
                    double dist2 = 0.0;
                    for (std::size_t cd = 0; cd < dd; ++cd) dist2 += v1[cd] * v1[cd];
                    if (dist2 > trunc_bound * trunc_bound) truncation_violated = true;
                    for (std::size_t cd = 0; cd < dd && !truncation_violated; ++cd) {
                        double up = bridge_crossing_prob(trunc_bound - v0[cd],
                                                         trunc_bound - v1[cd], gap);
                        if (up > 0.0 && rng.uniform() < up) truncation_violated = true;
                        if (truncation_violated) break;
                        double dn = bridge_crossing_prob(trunc_bound + v0[cd],
                                                         trunc_bound + v1[cd], gap);
                        if (dn > 0.0 && rng.uniform() < dn) truncation_violated = true;
                    }
                }
                weight_factor = truncation_violated ? 0.0 : 1.0;
            } else {
                std::uint64_t hits =
                    propagate_slab(env, index.slabs[k], a, b, v0, v1, opts.modified, trunc_bound,
                                   opts.use_truncation, truncation_violated, rng, scratch,
                                   kill_radius);
                if (truncation_violated) {
                    weight_factor = 0.0;
                } else if (zero_temperature) {
                    weight_factor = hits == 0 ? 1.0 : 0.0;
                } else {
                    weight_factor = hits == 0 ? 1.0 : std::exp(-beta * static_cast<double>(hits));
                }
            }
            g[i] = weight_factor;
        }
        std::swap(pos, pos_next);

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] *= g[i];
            total += weights[i];
        }
        if (total <= 0.0) {
            out.extinct = true;
            out.log_z = -std::numeric_limits<double>::infinity();
            return out;
        }
        log_z += std::log(total);
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            weights[i] /= total;
            sum_sq += weights[i] * weights[i];
        }

        if (record) {
            if (std::abs(b - opts.midpoint_r) < 1e-9)
                for (std::size_t i = 0; i < n; ++i) mid_x[i] = pos[i * dd];
            if (std::abs(b - opts.midpoint_s) < 1e-9)
                for (std::size_t i = 0; i < n; ++i) mid_y[i] = pos[i * dd];
        }

        const double ess = 1.0 / sum_sq;
        out.min_ess_fraction = std::min(out.min_ess_fraction, ess / static_cast<double>(n));
        const bool last = (k + 1 == n_slabs);
        if (!last && ess < cfg.ess_threshold * static_cast<double>(n)) {
            RngStream rng(island_key.child("resample").child(k));
            double u = rng.uniform() / static_cast<double>(n);
            double c = weights[0];
            std::size_t src = 0;
            for (std::size_t m = 0; m < n; ++m) {
                double target = u + static_cast<double>(m) / static_cast<double>(n);
                while ((target > c || weights[src] == 0.0) && src + 1 < n) c += weights[++src];
                pick[m] = static_cast<std::uint32_t>(src);
            }
            for (std::size_t m = 0; m < n; ++m)
                std::memcpy(gathered.data() + m * dd, pos.data() + pick[m] * dd,
                            dd * sizeof(double));
            std::swap(pos, gathered);
            if (record) {
                std::vector<double> mx(n), my(n);
                for (std::size_t m = 0; m < n; ++m) {
                    mx[m] = mid_x[pick[m]];
                    my[m] = mid_y[pick[m]];
                }
                mid_x = std::move(mx);
                mid_y = std::move(my);
            }
            std::fill(weights.begin(), weights.end(), 1.0 / static_cast<double>(n));
        }
    }
    out.log_z = log_z;
    if (record) {
        out.mid_x = std::move(mid_x);
        out.mid_y = std::move(mid_y);
        out.mid_w = weights;
    }
    return out;
}

}  // namespace

SmcResult estimate_partition_smc(const Environment& env, double beta, double t,
                                 const SmcConfig& config, SeedKey key, SmcOptions opts) {
    if (t > env.window().t_max)
        throw std::invalid_argument("estimate_partition_smc: window too small");
    if (config.n_particles < 2 || config.n_islands < 1 || config.slab_length <= 0.0 ||
        config.ess_threshold <= 0.0 || config.ess_threshold > 1.0)
        throw std::invalid_argument("estimate_partition_smc: bad config");
    if (config.resampling != "systematic")
        throw std::invalid_argument("estimate_partition_smc: unknown resampling scheme");
    if (opts.record_midpoints) {
        if (env.dim() != 1)
            throw std::invalid_argument("midpoint recording requires d = 1");
        auto aligned = [&](double v) {
            double q = v / config.slab_length;
            return std::abs(q - std::round(q)) < 1e-9 && v > 0.0 && v <= t;
        };
        if (!aligned(opts.midpoint_r) || !aligned(opts.midpoint_s))
            throw std::invalid_argument("midpoint times must align to slab boundaries");
    }

    const SlabIndex index = build_slab_index(env, t, config.slab_length);
    const auto m = static_cast<std::size_t>(config.n_islands);
    std::vector<IslandResult> islands(m);
    for (std::size_t j = 0; j < m; ++j)
        islands[j] = run_island(env, index, beta, t, config, key.child("island").child(j), opts);

    SmcResult res;
    res.island_log.resize(m);
    double max_log = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < m; ++j) {
        res.island_log[j] = islands[j].log_z;
        res.min_ess_fraction = std::min(res.min_ess_fraction, islands[j].min_ess_fraction);
        if (islands[j].extinct) ++res.islands_extinct;
        max_log = std::max(max_log, islands[j].log_z);
    }
    if (res.islands_extinct == static_cast<int>(m)) {
        res.extinct = true;
        res.estimate = {0.0, 0.0, static_cast<std::uint64_t>(config.n_particles) * m,
                        {key.state, "smc"}};
        res.log_value = -std::numeric_limits<double>::infinity();
        return res;
    }
    MeanVar scaled;  // island estimates divided by exp(max_log)
    for (std::size_t j = 0; j < m; ++j)
        scaled.add(islands[j].extinct ? 0.0 : std::exp(islands[j].log_z - max_log));
    const double scale = std::exp(max_log);
    res.estimate = {scaled.mean * scale, scaled.std_err() * scale,
                    static_cast<std::uint64_t>(config.n_particles) * m, {key.state, "smc"}};
    res.log_value = max_log + std::log(scaled.mean);

    if (opts.record_midpoints) {
        double island_norm = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            if (!islands[j].extinct) island_norm += std::exp(islands[j].log_z - max_log);
        for (std::size_t j = 0; j < m; ++j) {
            if (islands[j].extinct) continue;
            double iw = std::exp(islands[j].log_z - max_log) / island_norm;
            for (std::size_t i = 0; i < islands[j].mid_x.size(); ++i) {
                double w = iw * islands[j].mid_w[i];
                if (w <= 0.0) continue;
                res.midpoint_x.push_back(islands[j].mid_x[i]);
                res.midpoint_y.push_back(islands[j].mid_y[i]);
                res.midpoint_w.push_back(w);
            }
        }
        // Degeneracy diagnostics: distinct ancestral pairs and weight ESS.
        std::vector<std::pair<double, double>> pairs;
        pairs.reserve(res.midpoint_x.size());
        for (std::size_t i = 0; i < res.midpoint_x.size(); ++i)
            pairs.emplace_back(res.midpoint_x[i], res.midpoint_y[i]);
        std::sort(pairs.begin(), pairs.end());
        res.distinct_ancestors =
            static_cast<std::uint64_t>(std::unique(pairs.begin(), pairs.end()) - pairs.begin());
        double sw = 0.0, sw2 = 0.0;
        for (double w : res.midpoint_w) {
            sw += w;
            sw2 += w * w;
        }
        res.midpoint_ess = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
    }
    return res;
}

}  // namespace polymer
