#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "polymer/environment.hpp"
#include "polymer/rng.hpp"

namespace polymer {

// Fixed one-dimensional band layout: five unit bands centred at -2..2 inside
// the corridor [-5/2, 5/2]; the path is confined to [-3, 3] and only the
// disasters in [-7/2, 7/2] can interact with it.
namespace bands {
inline constexpr double kHalfBand = 0.5;
inline constexpr double kEndpointHalf = 2.5;
inline constexpr double kTubeHalf = 3.0;
inline constexpr double kActiveHalf = 3.5;
inline constexpr int kMinIndex = -2;
inline constexpr int kMaxIndex = 2;
}  // namespace bands

// Band indices whose unit interval overlaps the kill zone of a disaster at
// `position` (open overlap, |index - position| < 1). At most two indices.
std::vector<int> contaminated_bands(double position);

// s(j): the smallest band index not contaminated by disasters j and j+1.
std::vector<int> safe_sequence(std::span<const double> positions);

// Renewal indices rho_1 < rho_2 < ... of an interarrival sequence
// (Delta_1, Delta_2, ...): rho_{i+1} = inf{j > rho_i + 1 : Delta_j > Delta_{j-1}}
// with rho_0 = 0. Returned values are 1-based positions in the input.
std::vector<std::size_t> renewal_indices(std::span<const double> interarrivals);

struct StrategyTrace {
    double horizon = 0.0;
    std::vector<double> times;      // T_0 < T_1 < ... < horizon, inside the active corridor
    std::vector<double> positions;  // D_j
    std::vector<double> deltas;     // Delta_0 = T_0, Delta_i = T_i - T_{i-1}
    std::vector<int> safe;          // s(j)
    std::vector<std::size_t> renewals;  // rho_i as disaster indices
    double first_time = 0.0;        // F_t (horizon when there is no disaster)
    double last_time = 0.0;         // L_t (0 when there is no disaster)
    std::size_t n_renewals = 0;     // M(L_t)
    std::size_t sigma = 0;          // N(L_t) - M(L_t)
    double u_duration = 0.0;        // L_t - R_{M(L_t)}

    static StrategyTrace build(const Environment& env, double t);
};

// The event list realizing the survival strategy: position the path in the
// safe band at each disaster time, hold the band across the final (shortest)
// gap before each renewal and before the last disaster, stay in the tube
// throughout.
struct BandAt {
    double time;
    int band;
};
struct BandHold {
    double t_begin, t_end;
    int band;
};
struct StrategyEvents {
    std::vector<BandAt> at_times;
    std::vector<BandHold> holds;

    static StrategyEvents from_trace(const StrategyTrace& trace);
};

struct StrategyConfig {
    int n_particles = 2048;
    int n_islands = 8;
    double checkpoint_step = 0.1;
};

struct StrategyEstimate {
    double log_value = 0.0;
    double se_log = 0.0;
    bool positive = false;  // some island produced a nonzero estimate
};

struct StrategyResult {
    StrategyTrace trace;
    StrategyEstimate strategy;  // P(S_t), sequential splitting estimate
    StrategyEstimate tube;      // P(no hit, path stays in the tube)
    std::uint64_t survivors_checked = 0;
    std::uint64_t soundness_violations = 0;  // strategy survivors with a hit
};

// Monte Carlo estimate of the strategy event probability and of the direct
// tube survival probability, for free motion from x or the bridge to (t, y).
StrategyResult simulate_strategy(const Environment& env, double t, double x,
                                 std::optional<double> y, const StrategyConfig& config,
                                 SeedKey key);

struct BandTransitionReport {
    std::vector<double> s_grid;
    std::vector<double> p_hat, se;
    double c_fit = 0.0;  // smallest C with C (1/s + s) >= -log p + 3 se for all s
};

// Band-to-band transition probabilities inside the tube, and the constant of
// the -log p <= C/s + C s envelope.
BandTransitionReport band_transition_probe(std::span<const double> s_grid, int x_band, int y_band,
                            std::uint64_t n, SeedKey key);

struct OrderStatReport {
    int k = 0;
    double pmf_chi2 = 0.0, pmf_p = 0.0;            // rho_1 pmf against (k-1)/k!
    double gamma_ks = 0.0, gamma_p = 0.0;          // R_1 | rho_1 = k against Gamma(k, 7)
    bool printed_passes = false;                   // telescoping with denominators k-j
    bool standard_passes = false;                  // denominators k-j+1
    std::string renyi_winner;
    double indep_min_p = 1.0;                      // corr(sum, normalized component)
    std::uint64_t n_conditional = 0;
};

OrderStatReport orderstat_identities(int k, std::uint64_t n, SeedKey key);

}  // namespace polymer
