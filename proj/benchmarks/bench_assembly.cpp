#include <benchmark/benchmark.h>

#include "misciga/pde.hpp"

using namespace misciga;

static void AssembleAnnulus(benchmark::State& state) {
    const int level = static_cast<int>(state.range(0));
    RandomSineField field;
    const DiffusionProblem problem = make_test1_problem_2d(field, 3.0);
    const std::vector<int> alpha(2, level);
    const DiscretizationSpace space = make_space(problem.patch, alpha, 3.0);
    const std::vector<double> y = {0.5, -0.5, 0.25};
    for (auto _ : state) {
        benchmark::DoNotOptimize(assemble(problem, space, y));
    }
    state.SetComplexityN(1 << level);
}
BENCHMARK(AssembleAnnulus)->DenseRange(2, 6)->Complexity();

static void SolveSampleAnnulus(benchmark::State& state) {
    const int level = static_cast<int>(state.range(0));
    RandomSineField field;
    const DiffusionProblem problem = make_test1_problem_2d(field, 3.0);
    const std::vector<int> alpha(2, level);
    const std::vector<double> y = {0.5, -0.5, 0.25};
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_sample(problem, alpha, y));
    }
}
BENCHMARK(SolveSampleAnnulus)->DenseRange(2, 5);
