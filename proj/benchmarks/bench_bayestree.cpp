#include <algorithm>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "bayestree/model.hpp"
#include "bayestree/tree.hpp"

namespace {

std::vector<double> uniform_data(std::int64_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (double& x : xs)
        x = bayestree::uniform01(rng);
    return xs;
}

void BM_Build(benchmark::State& state) {
    const auto data = uniform_data(state.range(0), 1);
    bayestree::ModelConfig config;
    config.dim_trunc = static_cast<int>(state.range(1));
    for (auto _ : state) {
        auto tree = bayestree::build(data, config);
        benchmark::DoNotOptimize(tree.log_evidence());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Build)->Args({1000, 16})->Args({100000, 16})->Args({100000, 64})
    ->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
    auto data = uniform_data(state.range(0), 2);
    std::sort(data.begin(), data.end());
    const bayestree::ModelConfig config;
    for (auto _ : state) {
        auto s = bayestree::evaluate(data, bayestree::QueryPosition::inside(0.3), config);
        benchmark::DoNotOptimize(s.log_evidence);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(1000)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_PredictiveDensity(benchmark::State& state) {
    const auto tree = bayestree::build(uniform_data(state.range(0), 3), {});
    std::mt19937_64 rng(4);
    for (auto _ : state)
        benchmark::DoNotOptimize(bayestree::predictive_density(tree, bayestree::uniform01(rng)));
}
BENCHMARK(BM_PredictiveDensity)->Arg(1000)->Arg(100000);

void BM_Cdf(benchmark::State& state) {
    const auto tree = bayestree::build(uniform_data(state.range(0), 5), {});
    std::mt19937_64 rng(6);
    for (auto _ : state)
        benchmark::DoNotOptimize(bayestree::cdf(tree, bayestree::uniform01(rng)));
}
BENCHMARK(BM_Cdf)->Arg(100000);

void BM_InsertRemove(benchmark::State& state) {
    const auto tree = bayestree::build(uniform_data(state.range(0), 7), {});
    std::mt19937_64 rng(8);
    for (auto _ : state) {
        const double x = bayestree::uniform01(rng);
        auto grown = bayestree::insert(tree, x);
        auto back = bayestree::remove(grown, x);
        benchmark::DoNotOptimize(back.log_evidence());
    }
}
BENCHMARK(BM_InsertRemove)->Arg(100000);

void BM_Sample(benchmark::State& state) {
    const auto tree = bayestree::build(uniform_data(state.range(0), 9), {});
    std::mt19937_64 rng(10);
    for (auto _ : state)
        benchmark::DoNotOptimize(bayestree::sample(tree, rng));
}
BENCHMARK(BM_Sample)->Arg(100000);

} // namespace

BENCHMARK_MAIN();
