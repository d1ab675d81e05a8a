#include <vector>

#include <benchmark/benchmark.h>

#include "qmg/clearing.hpp"
#include "qmg/numerics.hpp"
#include "qmg/strategy.hpp"
#include "qmg/wigner.hpp"

using namespace qmg;

namespace {

const double h_E = 2.0 * pi;

void BM_FourierPair(benchmark::State& state) {
    const Grid1D grid(-12.0, 12.0, static_cast<std::size_t>(state.range(0)));
    const auto s = make_gaussian(0.3, 0.8, h_E, grid);
    for (auto _ : state) benchmark::DoNotOptimize(fourier_pair(s.amplitude(), h_E));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FourierPair)->RangeMultiplier(4)->Range(1024, 16384)->Complexity();

void BM_WignerPure(benchmark::State& state) {
    const RiskParams params;
    const auto s = make_oscillator_eigenstate(2, params, 0.0, 0.0);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(wigner_of_pure(s, WignerOptions{n, n}));
}
BENCHMARK(BM_WignerPure)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

void BM_ThermalSeries(benchmark::State& state) {
    GibbsSpec spec;
    spec.beta = 1.0 / static_cast<double>(state.range(0));
    spec.n_max = required_n_max(spec.beta, spec.params);
    const auto g = default_phase_grid();
    for (auto _ : state) benchmark::DoNotOptimize(thermal_series(spec, g, g));
    state.counters["n_max"] = spec.n_max;
}
BENCHMARK(BM_ThermalSeries)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_BestDivision(benchmark::State& state) {
    std::vector<TraderDeclaration> decls;
    for (int k = 0; k < state.range(0); ++k) {
        const double q0 = 0.1 * (k % 5) - 0.2;
        decls.push_back(TraderDeclaration{k, make_gaussian(q0, 0.6 + 0.05 * k, h_E), 1.0, 1.0});
    }
    for (auto _ : state) benchmark::DoNotOptimize(best_division(decls, FlowMode::capital));
}
BENCHMARK(BM_BestDivision)->DenseRange(2, 8, 2)->Unit(benchmark::kMillisecond);

} // namespace

BENCHMARK_MAIN();
