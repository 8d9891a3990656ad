// Serial reference vs OpenMP kernels for the three sweep workloads.

#include <benchmark/benchmark.h>

#include "dob/benchmarks.hpp"
#include "dob/qfilter.hpp"
#include "dob/robust_analysis.hpp"

namespace {

struct SweepInput {
    dob::bench::LinearBenchmark b = dob::bench::b1();
    std::vector<dob::PlantSample> samples = dob::sample_family(b.family, 200, 7);
    std::vector<double> taus{1e-1, 1e-2, 1e-3, 1e-4};
};

const SweepInput& sweep_input() {
    static const SweepInput in;
    return in;
}

void BM_ClosedLoopSweepSerial(benchmark::State& state) {
    const auto& in = sweep_input();
    for (auto _ : state)
        benchmark::DoNotOptimize(dob::closed_loop_sweep_serial(in.b.nominal, in.b.controller, in.b.qspec, in.taus, in.samples));
}

void BM_ClosedLoopSweepParallel(benchmark::State& state) {
    const auto& in = sweep_input();
    for (auto _ : state)
        benchmark::DoNotOptimize(dob::closed_loop_sweep(in.b.nominal, in.b.controller, in.b.qspec, in.taus, in.samples));
}

const std::vector<double> kTailA{0.5, 5.0, 2.0};
const dob::GainInterval kGains{0.25, 4.0, 1.0};

void BM_GainGridSweepSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(dob::gain_grid_sweep_serial(kTailA, kGains, 1000));
}

void BM_GainGridSweepParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(dob::gain_grid_sweep(kTailA, kGains, 1000));
}

void BM_EstimateSPhiSerial(benchmark::State& state) {
    const auto b = dob::bench::n1(1e-2);
    for (auto _ : state)
        benchmark::DoNotOptimize(dob::estimate_s_phi_serial(b.plant, b.nominal, b.controller, b.envelope, b.params.g_star,
                                                            static_cast<int>(state.range(0)), 1));
}

void BM_EstimateSPhiParallel(benchmark::State& state) {
    const auto b = dob::bench::n1(1e-2);
    for (auto _ : state)
        benchmark::DoNotOptimize(dob::estimate_s_phi(b.plant, b.nominal, b.controller, b.envelope, b.params.g_star,
                                                     static_cast<int>(state.range(0)), 1));
}

}  // namespace

BENCHMARK(BM_ClosedLoopSweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ClosedLoopSweepParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GainGridSweepSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GainGridSweepParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateSPhiSerial)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EstimateSPhiParallel)->Arg(20000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
