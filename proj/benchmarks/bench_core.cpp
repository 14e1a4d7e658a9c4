#include <benchmark/benchmark.h>

#include <limits>

#include "polymer/dispersion.hpp"
#include "polymer/environment.hpp"
#include "polymer/estimators.hpp"
#include "polymer/path.hpp"
#include "polymer/rng.hpp"

using namespace polymer;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void BM_StreamGaussian(benchmark::State& state) {
    RngStream rng(SeedKey{1});
    double acc = 0.0;
    for (auto _ : state) acc += rng.gaussian();
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_StreamGaussian);

void BM_PoissonLargeMean(benchmark::State& state) {
    RngStream rng(SeedKey{2});
    std::uint64_t acc = 0;
    for (auto _ : state) acc += rng.poisson(static_cast<double>(state.range(0)));
    benchmark::DoNotOptimize(acc);
}
BENCHMARK(BM_PoissonLargeMean)->Arg(5)->Arg(500)->Arg(500000);

void BM_EnvironmentSample(benchmark::State& state) {
    const double t = static_cast<double>(state.range(0));
    const Window w = window_for_horizon(t, 1);
    std::uint64_t i = 0;
    for (auto _ : state) {
        auto env = Environment::sample(w, 1, SeedKey{3}.child(i++));
        benchmark::DoNotOptimize(env.size());
    }
    state.SetLabel("volume " + std::to_string(static_cast<long>(w.volume())));
}
BENCHMARK(BM_EnvironmentSample)->Arg(8)->Arg(32)->Arg(64);

void BM_SkeletonEvaluate(benchmark::State& state) {
    const double t = 8.0;
    auto env = Environment::sample(window_for_horizon(t, 1), 1, SeedKey{4});
    std::vector<double> start = {0.0};
    std::uint64_t i = 0;
    for (auto _ : state) {
        auto sk = sample_skeleton(env, t, start, SeedKey{5}.child(i++));
        auto v = evaluate(sk, env, DeathClock{kInf, 1.0, false}, t);
        benchmark::DoNotOptimize(v.hit_count);
    }
}
BENCHMARK(BM_SkeletonEvaluate);

void BM_SmcIsland(benchmark::State& state) {
    const double t = static_cast<double>(state.range(0));
    auto env = Environment::sample(window_for_horizon(t, 1), 1, SeedKey{6});
    SmcConfig cfg;
    cfg.n_particles = 4096;
    cfg.n_islands = 1;
    SmcOptions opts;
    std::uint64_t i = 0;
    for (auto _ : state) {
        auto r = estimate_partition_smc(env, kInf, t, cfg, SeedKey{7}.child(i++), opts);
        benchmark::DoNotOptimize(r.log_value);
    }
    state.SetItemsProcessed(state.iterations() * cfg.n_particles *
                            static_cast<long>(t));
}
BENCHMARK(BM_SmcIsland)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_DispersionEval(benchmark::State& state) {
    RngStream rng(SeedKey{8});
    std::vector<double> xs, ys, ws;
    for (int i = 0; i < 20000; ++i) {
        xs.push_back(6.0 * rng.gaussian());
        ys.push_back(6.0 * rng.gaussian());
        ws.push_back(1.0);
    }
    EmpiricalMeasure2D m(xs, ys, ws);
    for (auto _ : state) {
        auto rep = dispersion(m, 2);
        benchmark::DoNotOptimize(rep.value);
    }
}
BENCHMARK(BM_DispersionEval);

}  // namespace

BENCHMARK_MAIN();
