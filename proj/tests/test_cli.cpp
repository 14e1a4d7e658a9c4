#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "polymer/environment.hpp"
#include "polymer/report.hpp"
#include "polymer/stats.hpp"

using namespace polymer;
using nlohmann::json;

namespace {

const std::string kCli = POLYMERLAB_CLI_PATH;

int run_cli(const std::string& args, int threads = 1) {
    std::string cmd = "POLYMER_THREADS=" + std::to_string(threads) + " " + kCli + " " + args +
                      " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string fresh_dir(const std::string& name) {
    std::string dir = std::string("/tmp/polymerlab_test/") + name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::string csv_header(const std::string& dir) {
    std::string text = read_text_file(dir + "/results.csv");
    return text.substr(0, text.find('\n'));
}

json json_without_walltime(const std::string& dir) {
    json j = json::parse(read_text_file(dir + "/results.json"));
    j.erase("wall_time_s");
    return j;
}

}  // namespace

TEST_CASE("csv headers are pinned per experiment") {
    struct Row {
        std::string args;
        std::string header;
    };
    const std::string common = " --seed 5 --particles 128 --islands 2 --n-paths 2000";
    std::vector<Row> rows = {
        {"sample-env --t 4", "dimension,t_max,box_half,volume,n_disasters"},
        {"estimate-z --t 2 --beta 1 --methods crude,smc", "method,beta,t,value,stderr,n,extinct"},
        {"free-energy --beta 0 --t 2,3 --n-env 2",
         "beta,t,a_hat,stderr,rate,n_env,censored,bias_diag"},
        {"beta-sweep --betas 0,inf --t 2,3 --n-env 2", "beta,t,a_hat,stderr,rate,n_env,censored"},
        {"superadditivity --beta 0 --s 2 --t-block 2 --n-env 2",
         "beta,s,t,a_s,a_t,a_st,slack,sigma,bound,pass"},
        {"concentration --beta 0 --t 4 --n-env 50", "beta,t,sd,sd_lo,sd_hi,n_env"},
        {"stripe-influence --beta 0 --t 4 --r 2 --n-env 2", "beta,t,r,influence,stderr,n"},
        {"strategy-verify --t 3 --n-env 2",
         "env_index,n_disasters,log_p_strategy,se_strategy,log_p_tube,se_tube,survivors,"
         "violations,sound"},
        {"orderstat-check --k 2",
         "k,pmf_chi2,pmf_p,gamma_ks,gamma_p,renyi_winner,indep_min_p,n_conditional"},
        {"dispersion --beta 0 --t 4 --n-env 2",
         "beta,t,mean_abs_log_m2,stderr,floored_fraction,min_m0,min_m0_t4,min_m0_t2,mean_ess,"
         "n_env"},
        {"nonintegrability", "M,mean,stderr,mean_modified,stderr_modified"},
    };
    int idx = 0;
    for (const auto& row : rows) {
        std::string dir = fresh_dir("hdr" + std::to_string(idx++));
        std::string args = row.args + common + " --out " + dir;
        // concentration overrides n-env to its own minimum
        REQUIRE(run_cli(args) == 0);
        CHECK(csv_header(dir) == row.header);
    }
}

TEST_CASE("reruns with different thread counts are byte-identical") {
    std::string a = fresh_dir("det_a");
    std::string b = fresh_dir("det_b");
    std::string args = "free-energy --beta inf --t 2,3,4 --n-env 6 --particles 256 --islands 2 "
                       "--seed 17 --out ";
    REQUIRE(run_cli(args + a, 1) == 0);
    REQUIRE(run_cli(args + b, 4) == 0);
    CHECK(read_text_file(a + "/results.csv") == read_text_file(b + "/results.csv"));
    CHECK(json_without_walltime(a) == json_without_walltime(b));
}

TEST_CASE("estimate-z on a serialized environment hits the closed form") {
    std::string dir = fresh_dir("envfile");
    Window w;
    w.t_max = 2.0;
    w.box = {{-10.0, 10.0}};
    Environment env(1, w, {Disaster{1.0, {0.0}}});
    write_text_file(dir + "/env.json", env.to_json());
    REQUIRE(run_cli("estimate-z --beta inf --t 2 --methods crude,smc,quadrature --n-paths 200000 "
                    "--particles 2048 --islands 4 --seed 3 --env-file " +
                    dir + "/env.json --out " + dir) == 0);
    json j = json::parse(read_text_file(dir + "/results.json"));
    double closed = 2.0 * (1.0 - normal_cdf(0.5));
    for (const auto& r : j["results"]) {
        double v = r["value"].get<double>();
        double se = r["stderr"].get<double>();
        CHECK(std::abs(v - closed) < 3.0 * se + 2e-4);
    }
    CHECK(j["version"].is_string());
    CHECK(j["config"]["beta"] == "inf");
}

TEST_CASE("config file values are used and flags override them") {
    std::string dir = fresh_dir("cfg");
    write_text_file(dir + "/cfg.json", "{\"seed\": 123, \"n_paths\": 5000}\n");
    REQUIRE(run_cli("nonintegrability --config " + dir + "/cfg.json --out " + dir) == 0);
    json j = json::parse(read_text_file(dir + "/results.json"));
    CHECK(j["config"]["seed"] == 123);
    CHECK(j["config"]["n_paths"] == 5000);
    REQUIRE(run_cli("nonintegrability --config " + dir + "/cfg.json --seed 9 --out " + dir) == 0);
    j = json::parse(read_text_file(dir + "/results.json"));
    CHECK(j["config"]["seed"] == 9);
    CHECK(j["config"]["n_paths"] == 5000);
}

TEST_CASE("validation failures exit with code 2") {
    std::string dir = fresh_dir("bad");
    CHECK(run_cli("estimate-z --beta -1 --t 2 --out " + dir) == 2);
    CHECK(run_cli("no-such-experiment") == 2);
    CHECK(run_cli("free-energy --beta 0 --t 4,3 --out " + dir) == 2);
}
