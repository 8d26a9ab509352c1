#include <benchmark/benchmark.h>

#include "misciga/adaptation.hpp"
#include "misciga/estimator.hpp"

using namespace misciga;

static void CombinationCoefficients(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const std::vector<double> unit(5, 1.0);
    const IndexSet lambda =
        build_total_degree(std::span(unit).first(2), std::span(unit).last(3), w);
    for (auto _ : state) {
        benchmark::DoNotOptimize(combination_coefficients(lambda));
    }
    state.SetComplexityN(static_cast<long>(lambda.size()));
}
BENCHMARK(CombinationCoefficients)->DenseRange(7, 12)->Complexity();

static void ReducedMargin(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const std::vector<double> unit(5, 1.0);
    const IndexSet lambda =
        build_total_degree(std::span(unit).first(2), std::span(unit).last(3), w);
    for (auto _ : state) {
        benchmark::DoNotOptimize(reduced_margin(lambda));
    }
}
BENCHMARK(ReducedMargin)->DenseRange(7, 12);
