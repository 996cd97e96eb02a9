#include "qsl/grape.hpp"

#include <benchmark/benchmark.h>

#include <cmath>

using namespace qsl;

namespace {

PulseSequence wavy(int n)
{
    PulseSequence p = PulseSequence::constant(n, 1.5 / n, 0.0, 0.0);
    for (int j = 0; j < n; ++j) {
        p.u1[j] = 2.0 * std::sin(0.3 * j);
        p.u2[j] = 1.5 * std::cos(0.2 * j);
    }
    return p;
}

} // namespace

static void BM_Generator(benchmark::State &state)
{
    const ModelParams p = ModelParams::flux_qubit().with_detuning(1.0);
    const CMat2 rho = density_from_state(StateLabel::PlusS).matrix();
    double t = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generator(rho, t, 1.2, -0.7, p));
        t += 1e-3;
    }
}
BENCHMARK(BM_Generator);

static void BM_FinalState(benchmark::State &state)
{
    const PulseSequence pulse = wavy(static_cast<int>(state.range(0)));
    const DensityMatrix rho0 = density_from_state(StateLabel::PlusX);
    const ModelParams p = ModelParams::flux_qubit();
    for (auto _ : state) benchmark::DoNotOptimize(final_state(rho0, pulse, p));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_FinalState)->Arg(20)->Arg(80);

static void BM_Gradient(benchmark::State &state)
{
    const PulseSequence pulse = wavy(static_cast<int>(state.range(0)));
    const DensityMatrix rho0 = density_from_state(StateLabel::PlusX);
    const DensityMatrix target = density_from_state(StateLabel::MinusX);
    const ModelParams p = ModelParams::flux_qubit();
    for (auto _ : state) benchmark::DoNotOptimize(gradient(pulse, rho0, target, p, 1e-4));
}
BENCHMARK(BM_Gradient)->Arg(20)->Arg(80)->Unit(benchmark::kMillisecond);

static void BM_Optimize(benchmark::State &state)
{
    GrapeConfig cfg;
    cfg.sign_restarts = false;
    const DensityMatrix rho0 = density_from_state(StateLabel::PlusX);
    const DensityMatrix target = density_from_state(StateLabel::MinusX);
    const ModelParams p = ModelParams::flux_qubit();
    for (auto _ : state) benchmark::DoNotOptimize(optimize(cfg, rho0, target, p).final_fidelity);
}
BENCHMARK(BM_Optimize)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
