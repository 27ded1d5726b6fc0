#include <benchmark/benchmark.h>

#include <vector>

#include "synergy/metrics.hpp"
#include "synergy/regression.hpp"
#include "synergy/review.hpp"
#include "synergy/rng.hpp"
#include "synergy/simulator.hpp"

namespace {

synergy::SimConfig bench_config(std::int64_t subjects) {
    synergy::SimConfig cfg;
    cfg.n_subjects = subjects;
    cfg.beta = 2.0;
    cfg.task_difficulty = {1.0, 1.3};
    cfg.condition_effect = 1.5;
    cfg.order_effect = 0.9;
    cfg.ability_log_sd = 0.25;
    cfg.error_log_sd = 0.2;
    cfg.base_seed = 42;
    return cfg;
}

void BM_SimulateCrossover(benchmark::State& state) {
    const synergy::SimConfig cfg = bench_config(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(synergy::generate(cfg));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 2 * state.range(0));
}
BENCHMARK(BM_SimulateCrossover)->Arg(16)->Arg(64)->Arg(256);

void BM_FitLmm(benchmark::State& state) {
    const std::vector<synergy::LongRecord> data =
        synergy::generate(bench_config(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(synergy::fit_lmm(data));
    }
}
BENCHMARK(BM_FitLmm)->Arg(8)->Arg(32)->Arg(128);

void BM_FitOls(benchmark::State& state) {
    const std::vector<synergy::LongRecord> data =
        synergy::generate(bench_config(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(synergy::fit_ols(data));
    }
}
BENCHMARK(BM_FitOls)->Arg(8)->Arg(32)->Arg(128);

void BM_TransformOdds(benchmark::State& state) {
    synergy::MetricSpec metric;
    metric.name = "accuracy";
    metric.direction = synergy::Direction::HigherBetter;
    metric.lower_bound = 0.0;
    metric.upper_bound = 1.0;
    synergy::SplitMix64 rng(7);
    std::vector<double> values(4096);
    for (double& v : values) {
        v = rng.uniform01();
    }
    for (auto _ : state) {
        double sum = 0.0;
        for (double v : values) {
            sum += synergy::transform_value(v, metric);
        }
        benchmark::DoNotOptimize(sum);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(values.size()));
}
BENCHMARK(BM_TransformOdds);

void BM_AuditDataset(benchmark::State& state) {
    const std::vector<synergy::StudyRecord> records =
        synergy::load_dataset(SYNERGY_DATA_DIR "/synergy_review.csv");
    for (auto _ : state) {
        benchmark::DoNotOptimize(synergy::audit(records));
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(records.size()));
}
BENCHMARK(BM_AuditDataset);

}  // namespace

BENCHMARK_MAIN();
