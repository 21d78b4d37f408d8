#include <benchmark/benchmark.h>

#include "heatperim/builders.hpp"
#include "heatperim/curvature.hpp"
#include "heatperim/functionals.hpp"

#include <cmath>
#include <numbers>

using namespace heatperim;

namespace {

void BM_NearDiagonalEnergy(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    auto b = buildSpace("circle", {{"n", n}});
    Vector u(n);
    for (int i = 0; i < n; ++i) u[i] = std::sin(2 * std::numbers::pi * i / n);
    for (auto _ : state) benchmark::DoNotOptimize(nearDiagonalEnergy(*b.space, u, 0.05));
}

void BM_MazyaCoarea(benchmark::State& state) {
    auto b = buildSpace("pointCloud", {{"n", state.range(0)}, {"dim", 2}, {"seed", 3}});
    Vector u = Vector::LinSpaced(b.space->size(), 0.0, 1.0);
    const double eps = 4 * b.space->resolution();
    for (auto _ : state) benchmark::DoNotOptimize(mazyaCoareaQuantity(*b.space, u, eps));
}

void BM_BestK(benchmark::State& state) {
    auto b = buildSpace("torus2d", {{"n", state.range(0)}});
    const auto gen = buildGenerator(b.space, GraphRule::radius(b.space->resolution()));
    for (auto _ : state) benchmark::DoNotOptimize(bestK(gen, 2));
}

}  // namespace

BENCHMARK(BM_NearDiagonalEnergy)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MazyaCoarea)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BestK)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
