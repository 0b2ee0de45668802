#include <benchmark/benchmark.h>

#include <memory>
#include <random>

#include "qff/control_matrix.hpp"
#include "qff/spectrum.hpp"

using namespace qff;

namespace {

CMatrix random_hermitian(std::mt19937_64& engine, int d, bool traceless) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    CMatrix m(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = Complex(gauss(engine), gauss(engine));
    CMatrix h = 0.5 * (m + m.adjoint());
    if (traceless) h -= (h.trace() / double(d)) * CMatrix::Identity(d, d);
    return h;
}

}  // namespace

static void BM_SinglePulseControlMatrix(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    std::mt19937_64 engine(1234);
    auto basis = std::make_shared<const Basis>(Basis::ggm(d));
    std::vector<CMatrix> control{random_hermitian(engine, d, false)};
    RMatrix coeffs = RMatrix::Random(1, 8);
    std::vector<CMatrix> noise{random_hermitian(engine, d, true)};
    PulseSequence p(control, coeffs, noise, RMatrix::Ones(1, 8),
                    RVector::Ones(8), basis);
    const RVector omega = log_grid(0.01, 100.0, 128);
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            detail::compute_single_pulse_control_matrix(p, omega));
    }
    state.SetComplexityN(d);
}
BENCHMARK(BM_SinglePulseControlMatrix)
    ->RangeMultiplier(2)
    ->Range(2, 16)
    ->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_ConjugationFidelityFF(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    std::mt19937_64 engine(1234);
    auto basis = std::make_shared<const Basis>(Basis::ggm(d));
    std::vector<CMatrix> control{random_hermitian(engine, d, false)};
    RMatrix coeffs = RMatrix::Random(1, 8);
    std::vector<CMatrix> noise{random_hermitian(engine, d, true)};
    PulseSequence p(control, coeffs, noise, RMatrix::Ones(1, 8),
                    RVector::Ones(8), basis);
    const RVector omega = log_grid(0.01, 100.0, 128);
    for (auto _ : state)
        benchmark::DoNotOptimize(fidelity_filter_function_direct(p, omega));
    state.SetComplexityN(d);
}
BENCHMARK(BM_ConjugationFidelityFF)
    ->RangeMultiplier(2)
    ->Range(2, 16)
    ->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_PeriodicVsReps(benchmark::State& state) {
    const long reps = state.range(0);
    std::mt19937_64 engine(99);
    auto basis = std::make_shared<const Basis>(Basis::pauli(1));
    std::vector<CMatrix> control{random_hermitian(engine, 2, false)};
    std::vector<CMatrix> noise{random_hermitian(engine, 2, true)};
    PulseSequence p(control, RMatrix::Random(1, 2), noise, RMatrix::Ones(1, 2),
                    RVector::Ones(2), basis);
    const RVector omega = log_grid(0.01, 10.0, 256);
    p.control_matrix(omega);  // cache once, time only the Neumann series
    for (auto _ : state)
        benchmark::DoNotOptimize(concatenate_periodic(p, omega, reps));
    state.SetComplexityN(reps);
}
BENCHMARK(BM_PeriodicVsReps)
    ->RangeMultiplier(8)
    ->Range(8, 32768)
    ->Complexity(benchmark::oLogN)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
