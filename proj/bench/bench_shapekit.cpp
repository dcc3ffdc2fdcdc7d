// Kernel timings and the serial vs OpenMP trial loop.
//
//   ./build/bench/shapekit_bench --benchmark_filter=Experiment

#include <benchmark/benchmark.h>

#include <cmath>

#include "shapekit/ces_sampling.hpp"
#include "shapekit/estimators.hpp"
#include "shapekit/mc_harness.hpp"

using namespace shapekit;

namespace {

const Complex kRho = std::polar(0.8, 2.0 * 3.14159265358979323846 / 5.0);

Dataset heavy_data(Index n, Index l) {
    const CesModel model = make_ces_model(toeplitz_scatter(kRho, n), ModularLaw::complex_t_with_power(n, 2.0, 4.0));
    RngStream rng(1, 0);
    return sample_ces_dataset(model, l, rng);
}

void BM_Tyler(benchmark::State& state) {
    const Index n = state.range(0);
    const Dataset d = heavy_data(n, 5 * n);
    for (auto _ : state) benchmark::DoNotOptimize(tyler(d));
}
BENCHMARK(BM_Tyler)->Arg(4)->Arg(8)->Arg(16);

void BM_BuildL(benchmark::State& state) {
    const Index n = state.range(0);
    const CMatrix v = tyler(heavy_data(n, 5 * n)).shape.matrix();
    const auto ops = make_structural_operators(n);
    for (auto _ : state) benchmark::DoNotOptimize(build_L(v, ops));
}
BENCHMARK(BM_BuildL)->Arg(4)->Arg(8)->Arg(16);

void BM_REstimate(benchmark::State& state) {
    const Index n = state.range(0);
    const Dataset d = heavy_data(n, 5 * n);
    const EstimatorOutput prelim = tyler(d);
    const auto table = rank_scores(ScoreFunction::van_der_waerden(n), d.size());
    std::uint64_t trial = 0;
    for (auto _ : state) {
        RngStream rng(2, trial++);
        benchmark::DoNotOptimize(r_estimate(d, prelim, table, rng));
    }
}
BENCHMARK(BM_REstimate)->Arg(4)->Arg(8)->Arg(16);

ExperimentConfig bench_config() {
    ExperimentConfig cfg = preset_config(Preset::fig2);
    cfg.sweep = {2.0, 10.0};
    cfg.trials = 400;
    cfg.seed = 3;
    return cfg;
}

void BM_ExperimentSerial(benchmark::State& state) {
    const ExperimentConfig cfg = bench_config();
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment_serial(cfg));
}
BENCHMARK(BM_ExperimentSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_ExperimentParallel(benchmark::State& state) {
    const ExperimentConfig cfg = bench_config();
    RunOptions opts;
    opts.workers = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_experiment(cfg, opts));
}
BENCHMARK(BM_ExperimentParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
