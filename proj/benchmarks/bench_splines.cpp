#include <benchmark/benchmark.h>

#include "misciga/splines.hpp"

using namespace misciga;

static void BasisEval(benchmark::State& state) {
    const int degree = static_cast<int>(state.range(0));
    const KnotVector kv = refined_knot_vector(degree, 5, 1.0);
    double xi = 0.0;
    for (auto _ : state) {
        xi += 0.618033988749895;
        if (xi > 1.0) xi -= 1.0;
        benchmark::DoNotOptimize(eval_basis(kv, xi));
    }
}
BENCHMARK(BasisEval)->Arg(1)->Arg(2)->Arg(3)->Arg(4);

static void BasisDerivatives(benchmark::State& state) {
    const int degree = static_cast<int>(state.range(0));
    const KnotVector kv = refined_knot_vector(degree, 5, 3.0);
    double xi = 0.0;
    for (auto _ : state) {
        xi += 0.618033988749895;
        if (xi > 1.0) xi -= 1.0;
        benchmark::DoNotOptimize(eval_basis_derivatives(kv, xi, 1));
    }
}
BENCHMARK(BasisDerivatives)->Arg(2)->Arg(4);
