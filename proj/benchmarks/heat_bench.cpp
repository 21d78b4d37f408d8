#include <benchmark/benchmark.h>

#include "heatperim/builders.hpp"
#include "heatperim/heat.hpp"

#include <random>

using namespace heatperim;

namespace {

Generator circleGenerator(int n) {
    auto b = buildSpace("circle", {{"n", n}});
    return buildGenerator(b.space, GraphRule::radius(b.space->resolution()));
}

Vector noise(Index n) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    Vector f(n);
    for (auto& v : f) v = d(rng);
    return f;
}

void applyHeat(benchmark::State& state, HeatStrategy strategy) {
    const auto gen = circleGenerator(static_cast<int>(state.range(0)));
    HeatOptions o;
    o.strategy = strategy;
    const HeatOperator op(gen, o);
    const Vector f = noise(gen.size());
    for (auto _ : state) benchmark::DoNotOptimize(op.apply(f, 1e-3));
    state.SetComplexityN(state.range(0));
}

void BM_SpectralApply(benchmark::State& s) { applyHeat(s, HeatStrategy::Spectral); }
void BM_KrylovApply(benchmark::State& s) { applyHeat(s, HeatStrategy::Krylov); }

void BM_SpectralSetup(benchmark::State& state) {
    const auto gen = circleGenerator(static_cast<int>(state.range(0)));
    HeatOptions o;
    o.strategy = HeatStrategy::Spectral;
    for (auto _ : state) benchmark::DoNotOptimize(HeatOperator(gen, o));
}

}  // namespace

BENCHMARK(BM_SpectralApply)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_KrylovApply)->RangeMultiplier(2)->Range(256, 2048)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SpectralSetup)->RangeMultiplier(2)->Range(256, 1024)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
