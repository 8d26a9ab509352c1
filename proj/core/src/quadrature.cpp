#include "misciga/quadrature.hpp"

#include "misciga/errors.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace misciga {

int level_to_nodes(int level) {
    if (level < 0) throw std::invalid_argument("level_to_nodes: level must be >= 0");
    if (level == 0) return 0;
    if (level == 1) return 1;
    return (1 << (level - 1)) + 1;
}

std::vector<double> cc_nodes(int level) {
    if (level < 1) throw std::invalid_argument("cc_nodes: level must be >= 1");
    const int m = level_to_nodes(level);
    if (m == 1) return {0.0};

    const int n = m - 1;
    std::vector<double> nodes(m);
    for (int i = 0; i <= n; ++i)
        nodes[i] = -std::cos(static_cast<double>(i) * std::numbers::pi / n);
    // Enforce exact symmetry so that coincident nodes across nested levels
    // compare equal bitwise (the estimator cache keys solves by node value).
    for (int i = 0; i < n - i; ++i) {
        const double v = 0.5 * (nodes[i] - nodes[n - i]);
        nodes[i] = v;
        nodes[n - i] = -v;
    }
    if (n % 2 == 0) nodes[n / 2] = 0.0;
    return nodes;
}

std::vector<double> cc_weights(int level) {
    if (level < 1) throw std::invalid_argument("cc_weights: level must be >= 1");
    const int m = level_to_nodes(level);
    if (m == 1) return {1.0};

    // Cosine-series closed form for the classical Clenshaw-Curtis weights on
    // [-1,1] (measure dx), then scaled by the uniform density 1/2. Exact for
    // polynomials of degree <= m-1.
    const int n = m - 1;
    std::vector<double> w(m);
    for (int j = 0; j <= n; ++j) {
        const double theta = static_cast<double>(j) * std::numbers::pi / n;
        double s = 1.0;
        for (int k = 1; k <= n / 2; ++k) {
            const double b = (2 * k == n) ? 1.0 : 2.0;
            s -= b / (4.0 * k * k - 1.0) * std::cos(2.0 * k * theta);
        }
        const double c = (j == 0 || j == n) ? 1.0 : 2.0;
        w[j] = c * s / n;
    }
    // Nodes are stored ascending (-cos ordering); the weights above are
    // symmetric in j so the ordering does not matter. Scale to density 1/2.
    for (double& x : w) x *= 0.5;
    return w;
}

const QuadratureRule& cc_rule(int level) {
    static std::map<int, QuadratureRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(level);
    if (it == cache.end()) {
        QuadratureRule rule{level, cc_nodes(level), cc_weights(level)};
        it = cache.emplace(level, std::move(rule)).first;
    }
    return it->second;
}

TensorRule tensor_rule(std::span<const int> levels) {
    TensorRule out;
    out.levels.assign(levels.begin(), levels.end());
    const int dim = out.dim();
    std::size_t total = 1;
    std::vector<const QuadratureRule*> rules(dim);
    for (int i = 0; i < dim; ++i) {
        if (levels[i] < 1)
            throw std::invalid_argument("tensor_rule: all levels must be >= 1");
        rules[i] = &cc_rule(levels[i]);
        total *= rules[i]->nodes.size();
    }
    out.points.resize(total * dim);
    out.weights.assign(total, 1.0);

    std::vector<std::size_t> idx(dim, 0);
    for (std::size_t j = 0; j < total; ++j) {
        for (int i = 0; i < dim; ++i) {
            out.points[j * dim + i] = rules[i]->nodes[idx[i]];
            out.weights[j] *= rules[i]->weights[idx[i]];
        }
        for (int i = dim - 1; i >= 0; --i) {
            if (++idx[i] < rules[i]->nodes.size()) break;
            idx[i] = 0;
        }
    }
    return out;
}

double tensor_quadrature(std::span<const int> levels,
                         const std::function<double(std::span<const double>)>& f) {
    for (int l : levels)
        if (l == 0) return 0.0;
    const TensorRule rule = tensor_rule(levels);
    double sum = 0.0;
    for (std::size_t j = 0; j < rule.size(); ++j) {
        const double v = f(rule.point(j));
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "tensor_quadrature: non-finite integrand at node (";
            for (int i = 0; i < rule.dim(); ++i)
                msg << (i ? ", " : "") << rule.point(j)[i];
            msg << ")";
            throw EvaluationError(msg.str());
        }
        sum += v * rule.weights[j];
    }
    return sum;
}

QuadratureRule gauss_legendre_01(int num_points) {
    if (num_points < 1) throw std::invalid_argument("gauss_legendre_01: need >= 1 point");
    const int n = num_points;
    QuadratureRule rule;
    rule.level = n;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    for (int k = 0; k < n; ++k) {
        // Newton iteration on P_n from the Chebyshev-like initial guess.
        double x = std::cos(std::numbers::pi * (k + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= n; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[k] = 0.5 * (x + 1.0);
        rule.weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    return rule;
}

}  // namespace misciga
