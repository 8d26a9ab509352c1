#include "misciga/estimator.hpp"

#include "misciga/quadrature.hpp"
#include "support/test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <thread>

using namespace misciga;
using misciga::testing::AnalyticToyBackend;
using misciga::testing::ConstantBackend;
using misciga::testing::CountingBackend;

namespace {

IndexSet rectangle(const MultiIndex& corner) {
    std::set<MultiIndex> members;
    MultiIndex i(corner.size(), 1);
    for (;;) {
        members.insert(i);
        int k = static_cast<int>(corner.size()) - 1;
        for (; k >= 0; --k) {
            if (++i[k] <= corner[k]) break;
            i[k] = 1;
        }
        if (k < 0) break;
    }
    return IndexSet(std::move(members));
}

}  // namespace

TEST_CASE("combination coefficients: rectangle, total-degree, singleton") {
    CHECK(combination_coefficients(rectangle({2, 2})) ==
          std::map<MultiIndex, int>{{{2, 2}, 1}});

    const IndexSet td(std::set<MultiIndex>{{1, 1}, {1, 2}, {2, 1}});
    CHECK(combination_coefficients(td) ==
          std::map<MultiIndex, int>{{{1, 2}, 1}, {{2, 1}, 1}, {{1, 1}, -1}});

    CHECK(combination_coefficients(IndexSet::single({1, 1, 1})) ==
          std::map<MultiIndex, int>{{{1, 1, 1}, 1}});
}

TEST_CASE("combination coefficients: conservation and margin support") {
    std::mt19937 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> dim_dist(1, 5);
        std::uniform_int_distribution<int> step_dist(0, 15);
        const IndexSet lambda =
            misciga::testing::random_downward_closed(rng, dim_dist(rng), step_dist(rng));
        const auto coeff = combination_coefficients(lambda);
        int sum = 0;
        for (const auto& [idx, c] : coeff) sum += c;
        CHECK(sum == 1);

        // nonzero coefficients live within one step of the margin
        const int k = lambda.dim();
        for (const auto& [idx, c] : coeff) {
            bool touches_margin = false;
            for (unsigned mask = 1; mask < (1u << k); ++mask) {
                MultiIndex up = idx;
                for (int j = 0; j < k; ++j)
                    if (mask & (1u << j)) ++up[j];
                if (!lambda.contains(up)) touches_margin = true;
            }
            CHECK(touches_margin);
        }
    }
}

TEST_CASE("full tensor value: zero convention, beta independence for constants") {
    const ConstantBackend backend(1, 1, 42.0);
    EstimatorCache cache;
    CHECK(full_tensor_value(backend, {0}, {2}, cache) == 0.0);
    CHECK(full_tensor_value(backend, {2}, {0}, cache) == 0.0);
    const double m11 = full_tensor_value(backend, {1}, {1}, cache);
    for (int beta = 1; beta <= 4; ++beta)
        CHECK(full_tensor_value(backend, {1}, {beta}, cache) == doctest::Approx(m11));
}

TEST_CASE("full tensor value matches a direct node-loop oracle") {
    const AnalyticToyBackend backend(1, 1, {3.0}, 0.8);
    EstimatorCache cache;
    const MultiIndex alpha = {2};
    const MultiIndex beta = {3};
    const double value = full_tensor_value(backend, alpha, beta, cache);

    const auto& rule = cc_rule(3);
    double oracle = 0.0;
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
        const std::vector<double> y = {rule.nodes[j]};
        oracle += backend.solve(alpha, y) * rule.weights[j];
    }
    CHECK(value == doctest::Approx(oracle).epsilon(1e-14));
}

TEST_CASE("telescoping: rectangle estimators collapse to the corner") {
    const AnalyticToyBackend backend(2, 1, {2.0, 3.0}, 1.3);
    EstimatorCache cache;
    for (int a1 = 1; a1 <= 3; ++a1)
        for (int a2 = 1; a2 <= 2; ++a2)
            for (int b = 1; b <= 3; ++b) {
                const IndexSet rect = rectangle({a1, a2, b});
                const double est = misc_estimate(backend, rect, cache);
                const double corner = full_tensor_value(backend, {a1, a2}, {b}, cache);
                CHECK(est == doctest::Approx(corner).epsilon(1e-12));
            }
}

TEST_CASE("constant functional: every set integrates to the constant") {
    const ConstantBackend backend(1, 2, 3.25);
    EstimatorCache cache;
    std::mt19937 rng(55);
    for (int trial = 0; trial < 25; ++trial) {
        const IndexSet lambda = misciga::testing::random_downward_closed(rng, 3, 10);
        CHECK(misc_estimate(backend, lambda, cache) == doctest::Approx(3.25).epsilon(1e-13));
    }
}

TEST_CASE("delta_mix: root detail, four-term expansion, rectangle sum") {
    const AnalyticToyBackend backend(1, 1, {3.0}, 0.8);
    EstimatorCache cache;

    CHECK(delta_mix(backend, {1}, {1}, cache) ==
          doctest::Approx(full_tensor_value(backend, {1}, {1}, cache)));

    const double expansion = full_tensor_value(backend, {2}, {2}, cache) -
                             full_tensor_value(backend, {1}, {2}, cache) -
                             full_tensor_value(backend, {2}, {1}, cache) +
                             full_tensor_value(backend, {1}, {1}, cache);
    CHECK(delta_mix(backend, {2}, {2}, cache) == doctest::Approx(expansion).epsilon(1e-13));

    double sum = 0.0;
    for (int a = 1; a <= 3; ++a)
        for (int b = 1; b <= 3; ++b) sum += delta_mix(backend, {a}, {b}, cache);
    CHECK(sum == doctest::Approx(full_tensor_value(backend, {3}, {3}, cache)).epsilon(1e-12));
}

TEST_CASE("misc_estimate equals the sum of mixed details") {
    const AnalyticToyBackend backend(1, 2, {2.5}, 1.1);
    EstimatorCache cache;
    std::mt19937 rng(777);
    for (int trial = 0; trial < 10; ++trial) {
        const IndexSet lambda = misciga::testing::random_downward_closed(rng, 3, 8);
        const double est = misc_estimate(backend, lambda, cache);
        double detail_sum = 0.0;
        for (const auto& member : lambda)
            detail_sum += delta_mix(backend, head(member, 1), tail(member, 2), cache);
        CHECK(est == doctest::Approx(detail_sum).epsilon(1e-12));
    }
}

TEST_CASE("cache idempotence: growing sets never recompute") {
    const AnalyticToyBackend inner(1, 1, {3.0}, 0.8);
    const CountingBackend backend(inner);
    EstimatorCache cache;

    IndexSet lambda(std::set<MultiIndex>{{1, 1}, {1, 2}, {2, 1}});
    misc_estimate(backend, lambda, cache);
    const long after_first = backend.count;
    misc_estimate(backend, lambda, cache);
    CHECK(backend.count == after_first);

    lambda.insert({2, 2});
    misc_estimate(backend, lambda, cache);
    const long after_growth = backend.count;
    misc_estimate(backend, lambda, cache);
    CHECK(backend.count == after_growth);

    // nested quadrature reuse: the beta = 2 grid contains the beta = 1 node,
    // so the root evaluation was shared, never recharged
    CHECK(cache.total_solves() == backend.count);
}

TEST_CASE("compute-once under concurrent access") {
    const AnalyticToyBackend inner(1, 1, {3.0}, 0.8);
    const CountingBackend backend(inner);
    EstimatorCache cache;
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&]() {
            for (int rep = 0; rep < 5; ++rep)
                full_tensor_value(backend, {2}, {3}, cache);
        });
    }
    for (auto& t : threads) t.join();
    CHECK(backend.count == level_to_nodes(3));
}

TEST_CASE("work accounting: new solves times the cost model") {
    const AnalyticToyBackend backend(1, 1, {3.0}, 0.8);
    EstimatorCache cache;
    full_tensor_value(backend, {2}, {2}, cache);
    // 3 nodes at alpha = 2, cost 2^2 each
    CHECK(cache.total_work() == doctest::Approx(3 * 4.0));
    full_tensor_value(backend, {2}, {3}, cache);
    // 2 genuinely new nodes at the finer grid
    CHECK(cache.total_work() == doctest::Approx(3 * 4.0 + 2 * 4.0));
}
