#pragma once

#include <functional>
#include <span>
#include <vector>

namespace misciga {

/// Number of Clenshaw-Curtis nodes at a quadrature level:
/// m(0) = 0, m(1) = 1, m(level) = 2^(level-1) + 1.
int level_to_nodes(int level);

/// Univariate quadrature rule for the uniform density 1/2 on [-1,1].
/// Nodes ascending, symmetric about zero; weights sum to one.
struct QuadratureRule {
    int level = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Clenshaw-Curtis nodes at a level, ascending. Level 1 is the single node 0.
/// Nested: nodes(level) is a bit-exact subset of nodes(level+1).
std::vector<double> cc_nodes(int level);

/// Clenshaw-Curtis weights including the density 1/2: the rule integrates
/// polynomials of degree <= m(level)-1 exactly against the uniform density.
std::vector<double> cc_weights(int level);

/// Nodes and weights in one call (memoized internally).
const QuadratureRule& cc_rule(int level);

/// Tensorized Clenshaw-Curtis rule on [-1,1]^N for levels >= 1 per direction.
struct TensorRule {
    std::vector<int> levels;
    /// Flattened grid: node j occupies [j*dim(), (j+1)*dim()).
    std::vector<double> points;
    std::vector<double> weights;

    int dim() const { return static_cast<int>(levels.size()); }
    std::size_t size() const { return weights.size(); }
    std::span<const double> point(std::size_t j) const {
        return {points.data() + j * levels.size(), levels.size()};
    }
};

/// Cartesian product of univariate rules; the last direction varies fastest.
TensorRule tensor_rule(std::span<const int> levels);

/// Applies the tensor rule to f. Returns 0 if any level is zero (the empty
/// rule convention used by the detail operators). Throws EvaluationError if
/// f returns a non-finite value, naming the offending node.
double tensor_quadrature(std::span<const int> levels,
                         const std::function<double(std::span<const double>)>& f);

/// Gauss-Legendre rule on [0,1] (used for per-element assembly integrals).
QuadratureRule gauss_legendre_01(int num_points);

/// Affine map from [-1,1] onto [lo,hi].
inline double affine_from_unit(double y, double lo, double hi) {
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * y;
}

}  // namespace misciga
