// polymer_lab: experiment driver for the disaster-field survival laboratory.
//
// Every experiment writes results.csv and results.json into --out. All
// randomness flows from the single --seed through keyed substreams, so a rerun
// with the same seed is byte-identical in results.csv regardless of
// POLYMER_THREADS.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "polymer/dispersion.hpp"
#include "polymer/environment.hpp"
#include "polymer/estimators.hpp"
#include "polymer/free_energy.hpp"
#include "polymer/report.hpp"
#include "polymer/strategy.hpp"
#include "polymer/survival_grid.hpp"

using nlohmann::json;
using namespace polymer;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;

struct CommonOptions {
    std::uint64_t seed = 1;
    std::string out = ".";
    std::string config_file;
    int dim = 1;
    double beta = 0.0;
    std::string beta_text = "0";
    std::vector<double> t_grid;
    int n_env = 50;
    std::uint64_t n_paths = 100000;
    int particles = 4096;
    int islands = 8;
    double ess_threshold = 0.5;
    double slab_length = 1.0;
};

double parse_beta(const std::string& text) {
    if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double b = std::stod(text, &used);
    if (used != text.size()) throw CLI::ValidationError("beta", "not a number: " + text);
    if (b < 0.0) throw CLI::ValidationError("beta", "beta must be >= 0");
    return b;
}

std::vector<double> parse_grid(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    if (out.empty()) throw CLI::ValidationError("grid", "empty grid");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] <= out[i - 1]) throw CLI::ValidationError("grid", "grid must increase");
    return out;
}

std::string beta_label(double beta) {
    return std::isinf(beta) ? "inf" : format_double(beta);
}

SmcConfig smc_config(const CommonOptions& o) {
    SmcConfig cfg;
    cfg.n_particles = o.particles;
    cfg.n_islands = o.islands;
    cfg.ess_threshold = o.ess_threshold;
    cfg.slab_length = o.slab_length;
    return cfg;
}

FreeEnergyConfig fe_config(const CommonOptions& o) {
    FreeEnergyConfig cfg;
    cfg.smc = smc_config(o);
    cfg.n_env = o.n_env;
    return cfg;
}

json config_echo(const CommonOptions& o, const std::string& experiment) {
    json j;
    j["experiment"] = experiment;
    j["seed"] = o.seed;
    j["dimension"] = o.dim;
    j["beta"] = beta_label(o.beta);
    j["t_grid"] = o.t_grid;
    j["n_env"] = o.n_env;
    j["n_paths"] = o.n_paths;
    j["particles"] = o.particles;
    j["islands"] = o.islands;
    j["ess_threshold"] = o.ess_threshold;
    j["slab_length"] = o.slab_length;
    return j;
}

class ResultWriter {
  public:
    ResultWriter(const CommonOptions& o, std::string experiment)
        : options_(o), experiment_(std::move(experiment)),
          start_(std::chrono::steady_clock::now()) {
        std::filesystem::create_directories(options_.out);
    }

    std::string& csv() { return csv_; }
    json& results() { return results_; }
    json& extra() { return extra_; }

    void finish() {
        write_text_file(options_.out + "/results.csv", csv_);
        json j;
        j["experiment"] = experiment_;
        j["version"] = version_string();
        j["config"] = config_echo(options_, experiment_);
        j["seed"] = {{"master", options_.seed}, {"experiment", experiment_}};
        j["results"] = results_;
        if (!extra_.empty()) j["analysis"] = extra_;
        auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_);
        j["wall_time_s"] = elapsed.count();
        write_text_file(options_.out + "/results.json", j.dump(2) + "\n");
    }

  private:
    const CommonOptions& options_;
    std::string experiment_;
    std::string csv_;
    json results_ = json::array();
    json extra_;
    std::chrono::steady_clock::time_point start_;
};

// --- experiments ---

void run_sample_env(const CommonOptions& o) {
    ResultWriter out(o, "sample-env");
    double t = o.t_grid.front();
    Window w = window_for_horizon(t, o.dim);
    Environment env = Environment::sample(w, o.dim, SeedKey{o.seed}.child("env"));
    write_text_file(o.out + "/environment.json", env.to_json() + "\n");
    out.csv() = "dimension,t_max,box_half,volume,n_disasters\n";
    out.csv() += format_double(o.dim) + "," + format_double(w.t_max) + "," +
                 format_double(w.box[0][1]) + "," + format_double(w.volume()) + "," +
                 format_double(static_cast<double>(env.size())) + "\n";
    out.results().push_back({{"n_disasters", env.size()}, {"volume", w.volume()}});
    out.finish();
}

void run_estimate_z(const CommonOptions& o, const std::string& env_file,
                    const std::string& methods, bool modified, bool truncation) {
    ResultWriter out(o, "estimate-z");
    double t = o.t_grid.front();
    Environment env = env_file.empty()
                          ? Environment::sample(window_for_horizon(t, o.dim), o.dim,
                                                 SeedKey{o.seed}.child("env"))
                          : Environment::from_json(read_text_file(env_file));
    out.csv() = "method,beta,t,value,stderr,n,extinct\n";
    auto emit = [&](const std::string& method, double value, double se, std::uint64_t n,
                    bool extinct) {
        out.csv() += method + "," + beta_label(o.beta) + "," + format_double(t) + "," +
                     format_double(value) + "," + format_double(se) + "," +
                     format_double(static_cast<double>(n)) + "," + (extinct ? "1" : "0") + "\n";
        out.results().push_back({{"method", method},
                                 {"value", value},
                                 {"stderr", se},
                                 {"n", n},
                                 {"extinct", extinct}});
    };
    std::stringstream ss(methods);
    std::string method;
    while (std::getline(ss, method, ',')) {
        if (method == "crude") {
            CrudeOptions copts;
            copts.modified = modified;
            copts.use_truncation = truncation;
            auto e = estimate_partition_crude(env, o.beta, t, o.n_paths,
                                              SeedKey{o.seed}.child("crude"), copts);
            emit("crude", e.value, e.std_err, e.n, false);
        } else if (method == "smc") {
            SmcOptions sopts;
            sopts.modified = modified;
            sopts.use_truncation = truncation;
            auto r = estimate_partition_smc(env, o.beta, t, smc_config(o),
                                            SeedKey{o.seed}.child("smc"), sopts);
            emit("smc", r.estimate.value, r.estimate.std_err, r.estimate.n, r.extinct);
        } else if (method == "quadrature") {
            double z = oracle_survival_quadrature(env, o.beta, t, modified);
            emit("quadrature", z, 0.0, 0, false);
        } else {
            throw CLI::ValidationError("methods", "unknown method: " + method);
        }
    }
    out.finish();
}

void run_free_energy(const CommonOptions& o) {
    ResultWriter out(o, "free-energy");
    auto pts = free_energy_curve(o.beta, o.t_grid, fe_config(o), SeedKey{o.seed});
    out.csv() = "beta,t,a_hat,stderr,rate,n_env,censored,bias_diag\n";
    for (const auto& p : pts) {
        out.csv() += beta_label(p.beta) + "," + format_double(p.t) + "," +
                     format_double(p.a_hat) + "," + format_double(p.a_se) + "," +
                     format_double(p.a_hat / p.t) + "," + format_double(p.n_env) + "," +
                     format_double(p.censored) + "," + format_double(p.bias_diag) + "\n";
        out.results().push_back({{"t", p.t},
                                 {"a_hat", p.a_hat},
                                 {"stderr", p.a_se},
                                 {"n_env", p.n_env},
                                 {"censored", p.censored},
                                 {"bias_diag", p.bias_diag}});
    }
    if (pts.size() >= 3) {
        auto e = extrapolate_rate(pts);
        out.extra() = {{"p_hat", e.p_hat},
                       {"half_width", e.half_width},
                       {"slope", e.slope},
                       {"chi2_red", e.chi2_red}};
    }
    out.finish();
}

void run_beta_sweep(const CommonOptions& o, const std::string& betas_text) {
    ResultWriter out(o, "beta-sweep");
    out.csv() = "beta,t,a_hat,stderr,rate,n_env,censored\n";
    std::stringstream ss(betas_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double beta = parse_beta(item);
        // The key carries no beta: every beta sees the same environments and
        // path randomness.
        auto pts = free_energy_curve(beta, o.t_grid, fe_config(o), SeedKey{o.seed});
        for (const auto& p : pts) {
            out.csv() += beta_label(beta) + "," + format_double(p.t) + "," +
                         format_double(p.a_hat) + "," + format_double(p.a_se) + "," +
                         format_double(p.a_hat / p.t) + "," + format_double(p.n_env) + "," +
                         format_double(p.censored) + "\n";
            out.results().push_back({{"beta", beta_label(beta)},
                                     {"t", p.t},
                                     {"a_hat", p.a_hat},
                                     {"stderr", p.a_se},
                                     {"censored", p.censored}});
        }
    }
    out.finish();
}

void run_superadditivity(const CommonOptions& o, double s, double t) {
    ResultWriter out(o, "superadditivity");
    auto rep = superadditivity_check(o.beta, s, t, fe_config(o), SeedKey{o.seed});
    out.csv() = "beta,s,t,a_s,a_t,a_st,slack,sigma,bound,pass\n";
    out.csv() += beta_label(o.beta) + "," + format_double(s) + "," + format_double(t) + "," +
                 format_double(rep.at_s.a_hat) + "," + format_double(rep.at_t.a_hat) + "," +
                 format_double(rep.at_st.a_hat) + "," + format_double(rep.slack) + "," +
                 format_double(rep.sigma) + "," + format_double(rep.bound) + "," +
                 (rep.pass ? "1" : "0") + "\n";
    out.results().push_back({{"slack", rep.slack},
                             {"sigma", rep.sigma},
                             {"bound", rep.bound},
                             {"pass", rep.pass}});
    out.finish();
}

void run_concentration(const CommonOptions& o) {
    ResultWriter out(o, "concentration");
    auto rep = concentration_scan(o.beta, o.t_grid, fe_config(o), SeedKey{o.seed});
    out.csv() = "beta,t,sd,sd_lo,sd_hi,n_env\n";
    for (const auto& p : rep.points) {
        out.csv() += beta_label(o.beta) + "," + format_double(p.t) + "," + format_double(p.sd) +
                     "," + format_double(p.sd_lo) + "," + format_double(p.sd_hi) + "," +
                     format_double(p.n_env) + "\n";
        out.results().push_back(
            {{"t", p.t}, {"sd", p.sd}, {"sd_lo", p.sd_lo}, {"sd_hi", p.sd_hi}});
    }
    out.extra() = {{"slope", rep.slope}, {"slope_se", rep.slope_se}};
    out.finish();
}

void run_stripe_influence(const CommonOptions& o, double stripe) {
    ResultWriter out(o, "stripe-influence");
    auto e = stripe_influence(o.beta, o.t_grid.front(), stripe, fe_config(o), SeedKey{o.seed});
    out.csv() = "beta,t,r,influence,stderr,n\n";
    out.csv() += beta_label(o.beta) + "," + format_double(o.t_grid.front()) + "," +
                 format_double(stripe) + "," + format_double(e.value) + "," +
                 format_double(e.std_err) + "," + format_double(static_cast<double>(e.n)) + "\n";
    out.results().push_back({{"influence", e.value}, {"stderr", e.std_err}, {"n", e.n}});
    out.finish();
}

void run_strategy_verify(const CommonOptions& o) {
    ResultWriter out(o, "strategy-verify");
    double t = o.t_grid.front();
    StrategyConfig cfg;
    cfg.n_particles = o.particles;
    cfg.n_islands = o.islands;
    out.csv() = "env_index,n_disasters,log_p_strategy,se_strategy,log_p_tube,se_tube,survivors,"
                "violations,sound\n";
    const Window w = window_for_horizon(t, 1);
    int unsound = 0;
    for (int e = 0; e < o.n_env; ++e) {
        auto env = Environment::sample(w, 1, SeedKey{o.seed}.child("env").child(
                                                  static_cast<std::uint64_t>(e)));
        auto res = simulate_strategy(env, t, 0.0, std::nullopt, cfg,
                                     SeedKey{o.seed}.child("strategy").child(
                                         static_cast<std::uint64_t>(e)));
        bool sound = res.soundness_violations == 0;
        if (!sound) ++unsound;
        out.csv() += format_double(e) + "," +
                     format_double(static_cast<double>(res.trace.times.size())) + "," +
                     format_double(res.strategy.log_value) + "," +
                     format_double(res.strategy.se_log) + "," +
                     format_double(res.tube.log_value) + "," + format_double(res.tube.se_log) +
                     "," + format_double(static_cast<double>(res.survivors_checked)) + "," +
                     format_double(static_cast<double>(res.soundness_violations)) + "," +
                     (sound ? "1" : "0") + "\n";
        out.results().push_back({{"env_index", e},
                                 {"log_p_strategy", res.strategy.log_value},
                                 {"log_p_tube", res.tube.log_value},
                                 {"violations", res.soundness_violations}});
    }
    out.extra() = {{"unsound_environments", unsound}};
    out.finish();
}

void run_orderstat_check(const CommonOptions& o, const std::string& ks_text) {
    ResultWriter out(o, "orderstat-check");
    out.csv() = "k,pmf_chi2,pmf_p,gamma_ks,gamma_p,renyi_winner,indep_min_p,n_conditional\n";
    std::stringstream ss(ks_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        int k = std::stoi(item);
        auto rep = orderstat_identities(k, o.n_paths,
                                        SeedKey{o.seed}.child("orderstat").child(
                                            static_cast<std::uint64_t>(k)));
        out.csv() += format_double(k) + "," + format_double(rep.pmf_chi2) + "," +
                     format_double(rep.pmf_p) + "," + format_double(rep.gamma_ks) + "," +
                     format_double(rep.gamma_p) + "," + rep.renyi_winner + "," +
                     format_double(rep.indep_min_p) + "," +
                     format_double(static_cast<double>(rep.n_conditional)) + "\n";
        out.results().push_back({{"k", k},
                                 {"pmf_p", rep.pmf_p},
                                 {"gamma_p", rep.gamma_p},
                                 {"renyi_winner", rep.renyi_winner},
                                 {"indep_min_p", rep.indep_min_p}});
    }
    out.finish();
}

void run_dispersion(const CommonOptions& o) {
    ResultWriter out(o, "dispersion");
    auto rep = dispersion_scan(o.beta, o.t_grid, o.n_env, smc_config(o), SeedKey{o.seed});
    out.csv() = "beta,t,mean_abs_log_m2,stderr,floored_fraction,min_m0,min_m0_t4,min_m0_t2,"
                "mean_ess,n_env\n";
    for (const auto& p : rep.points) {
        out.csv() += beta_label(o.beta) + "," + format_double(p.t) + "," +
                     format_double(p.mean_abs_log_m2) + "," + format_double(p.se_abs_log_m2) +
                     "," + format_double(p.floored_fraction) + "," + format_double(p.min_m0) +
                     "," + format_double(p.min_m0_t4) + "," + format_double(p.min_m0_t2) + "," +
                     format_double(p.mean_ess) + "," + format_double(p.n_env) + "\n";
        out.results().push_back({{"t", p.t},
                                 {"mean_abs_log_m2", p.mean_abs_log_m2},
                                 {"min_m0_t4", p.min_m0_t4},
                                 {"min_m0_t2", p.min_m0_t2}});
    }
    out.extra() = {{"log_fit_intercept", rep.log_fit_intercept},
                   {"log_fit_slope", rep.log_fit_slope}};
    out.finish();
}

void run_nonintegrability(const CommonOptions& o, const std::string& m_text, double horizon) {
    ResultWriter out(o, "nonintegrability");
    std::vector<double> m_grid = parse_grid(m_text);
    auto rep = first_disaster_mechanism(m_grid, o.n_paths, horizon, SeedKey{o.seed});
    out.csv() = "M,mean,stderr,mean_modified,stderr_modified\n";
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
        out.csv() += format_double(m_grid[i]) + "," + format_double(rep.mean[i]) + "," +
                     format_double(rep.se[i]) + "," + format_double(rep.mean_mod[i]) + "," +
                     format_double(rep.se_mod[i]) + "\n";
        out.results().push_back({{"M", m_grid[i]},
                                 {"mean", rep.mean[i]},
                                 {"mean_modified", rep.mean_mod[i]}});
    }
    out.extra() = {{"slope", rep.slope}, {"lambda", rep.lambda}};
    out.finish();
}

void apply_config_file(CommonOptions& o) {
    if (o.config_file.empty()) return;
    json j = json::parse(read_text_file(o.config_file));
    if (j.contains("seed")) o.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("beta")) o.beta_text = j["beta"].is_string()
                                              ? j["beta"].get<std::string>()
                                              : format_double(j["beta"].get<double>());
    if (j.contains("n_env")) o.n_env = j["n_env"].get<int>();
    if (j.contains("n_paths")) o.n_paths = j["n_paths"].get<std::uint64_t>();
    if (j.contains("particles")) o.particles = j["particles"].get<int>();
    if (j.contains("islands")) o.islands = j["islands"].get<int>();
    if (j.contains("ess_threshold")) o.ess_threshold = j["ess_threshold"].get<double>();
    if (j.contains("slab_length")) o.slab_length = j["slab_length"].get<double>();
    if (j.contains("out")) o.out = j["out"].get<std::string>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polymer_lab: survival and free-energy experiments for the "
                 "Brownian polymer among space-time disasters"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    CommonOptions o;
    std::string t_text = "4";
    std::string betas_text = "0,1,inf";
    std::string env_file, methods = "crude,smc";
    std::string ks_text = "2,3,5";
    std::string m_text = "100,1000,10000";
    bool modified = false, truncation = false;
    double s_value = 4.0, t_value = 4.0, stripe = 1.0, horizon = 10.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--seed", o.seed, "master seed (64-bit unsigned)");
        cmd->add_option("--out", o.out, "output directory");
        cmd->add_option("--config", o.config_file, "JSON config file (flags override)");
        cmd->add_option("--d", o.dim, "spatial dimension");
        cmd->add_option("--beta", o.beta_text, "inverse temperature (decimal or 'inf')");
        cmd->add_option("--t", t_text, "time horizon or comma-separated grid");
        cmd->add_option("--n-env", o.n_env, "number of environments");
        cmd->add_option("--n-paths", o.n_paths, "number of paths / samples");
        cmd->add_option("--particles", o.particles, "particles per island");
        cmd->add_option("--islands", o.islands, "independent islands");
        cmd->add_option("--ess-threshold", o.ess_threshold, "resampling trigger");
        cmd->add_option("--slab", o.slab_length, "slab length");
    };

    auto* c_sample = app.add_subcommand("sample-env", "draw and serialize an environment");
    add_common(c_sample);
    auto* c_z = app.add_subcommand("estimate-z", "survival probability estimates");
    add_common(c_z);
    c_z->add_option("--env-file", env_file, "environment JSON (fresh sample when absent)");
    c_z->add_option("--methods", methods, "comma list of crude,smc,quadrature");
    c_z->add_flag("--modified", modified, "ignore disasters before time 1");
    c_z->add_flag("--truncation", truncation, "restrict to the truncation event");
    auto* c_fe = app.add_subcommand("free-energy", "a(t) curve and extrapolated rate");
    add_common(c_fe);
    auto* c_sweep = app.add_subcommand("beta-sweep", "a(t) across beta, common seeds");
    add_common(c_sweep);
    c_sweep->add_option("--betas", betas_text, "comma list of beta values");
    auto* c_super = app.add_subcommand("superadditivity", "slack of a(s+t) - a(s) - a(t)");
    add_common(c_super);
    c_super->add_option("--s", s_value, "first block length");
    c_super->add_option("--t-block", t_value, "second block length");
    auto* c_conc = app.add_subcommand("concentration", "spread of log Z across environments");
    add_common(c_conc);
    auto* c_stripe = app.add_subcommand("stripe-influence", "effect of removing one stripe");
    add_common(c_stripe);
    c_stripe->add_option("--r", stripe, "stripe start");
    auto* c_strat = app.add_subcommand("strategy-verify", "survival strategy soundness");
    add_common(c_strat);
    auto* c_order = app.add_subcommand("orderstat-check", "renewal and order statistics laws");
    add_common(c_order);
    c_order->add_option("--k", ks_text, "comma list of renewal sizes");
    auto* c_disp = app.add_subcommand("dispersion", "midpoint dispersion scan");
    add_common(c_disp);
    auto* c_non = app.add_subcommand("nonintegrability", "first-disaster truncated means");
    add_common(c_non);
    c_non->add_option("--M", m_text, "comma list of truncation levels");
    c_non->add_option("--horizon", horizon, "time horizon for the first disaster");

    try {
        app.parse(argc, argv);
        apply_config_file(o);
        // flags override the file: reparse on top of the file-loaded defaults
        app.clear();
        app.parse(argc, argv);
        o.beta = parse_beta(o.beta_text);
        o.t_grid = parse_grid(t_text);

        if (c_sample->parsed()) run_sample_env(o);
        if (c_z->parsed()) run_estimate_z(o, env_file, methods, modified, truncation);
        if (c_fe->parsed()) run_free_energy(o);
        if (c_sweep->parsed()) run_beta_sweep(o, betas_text);
        if (c_super->parsed()) run_superadditivity(o, s_value, t_value);
        if (c_conc->parsed()) run_concentration(o);
        if (c_stripe->parsed()) run_stripe_influence(o, stripe);
        if (c_strat->parsed()) run_strategy_verify(o);
        if (c_order->parsed()) run_orderstat_check(o, ks_text);
        if (c_disp->parsed()) run_dispersion(o);
        if (c_non->parsed()) run_nonintegrability(o, m_text, horizon);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::runtime_error& e) {
        std::string what = e.what();
        std::fprintf(stderr, "error: %s\n", what.c_str());
        return what.find("particle budget") != std::string::npos ? kExitBudget : 1;
    }
    return 0;
}
