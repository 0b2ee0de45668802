#include <benchmark/benchmark.h>

#include "qff/basis.hpp"

using namespace qff;

static void BM_GgmConstruction(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    for (auto _ : state) {
        Basis b = Basis::ggm(d);
        benchmark::DoNotOptimize(b.element(0));
    }
    state.SetComplexityN(d);
}
BENCHMARK(BM_GgmConstruction)->RangeMultiplier(2)->Range(2, 16)->Complexity();

// the sparse GGM tensor should build far faster than the dense Pauli one
static void BM_TraceTensorGgm(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    for (auto _ : state) {
        Basis b = Basis::ggm(d);  // fresh basis: empty cache each iteration
        benchmark::DoNotOptimize(b.trace_tensor().nnz());
    }
    state.SetComplexityN(d);
}
BENCHMARK(BM_TraceTensorGgm)->DenseRange(2, 8, 2)->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_TraceTensorPauli(benchmark::State& state) {
    const int n_qubits = static_cast<int>(state.range(0));
    for (auto _ : state) {
        Basis b = Basis::pauli(n_qubits);
        benchmark::DoNotOptimize(b.trace_tensor().nnz());
    }
    state.SetComplexityN(1 << n_qubits);
}
BENCHMARK(BM_TraceTensorPauli)->DenseRange(1, 3)->Complexity()
    ->Unit(benchmark::kMillisecond);

static void BM_Liouville(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const Basis b = Basis::ggm(d);
    const CMatrix u = [&] {
        CMatrix h = CMatrix::Random(d, d);
        h = 0.5 * (h + h.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
        CVector phases(d);
        for (int i = 0; i < d; ++i)
            phases(i) = std::exp(Complex(0.0, -es.eigenvalues()(i)));
        return (es.eigenvectors() * phases.asDiagonal() *
                es.eigenvectors().adjoint())
            .eval();
    }();
    for (auto _ : state) benchmark::DoNotOptimize(b.liouville(u));
    state.SetComplexityN(d);
}
BENCHMARK(BM_Liouville)->RangeMultiplier(2)->Range(2, 16)->Complexity();
