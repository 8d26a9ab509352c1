#include "misciga/splines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace misciga {

KnotVector::KnotVector(std::vector<double> knots, int degree)
    : knots_(std::move(knots)), degree_(degree) {
    if (degree_ < 1)
        throw std::invalid_argument("knot vector: degree must be >= 1");
    const int n = static_cast<int>(knots_.size()) - degree_ - 1;
    if (n < degree_ + 1)
        throw std::invalid_argument("knot vector: need at least degree+1 basis functions");
    if (!std::is_sorted(knots_.begin(), knots_.end()))
        throw std::invalid_argument("knot vector: knots must be non-decreasing");
    if (knots_.front() != 0.0 || knots_.back() != 1.0)
        throw std::invalid_argument("knot vector: domain must be [0,1]");

    // Multiplicities are counted with exact equality; constructors are
    // expected to produce coincident knots bit-identically.
    unique_.push_back(knots_.front());
    mult_.push_back(1);
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (knots_[i] == unique_.back()) {
            ++mult_.back();
        } else {
            unique_.push_back(knots_[i]);
            mult_.push_back(1);
        }
    }
    for (std::size_t i = 0; i < mult_.size(); ++i) {
        if (mult_[i] > degree_ + 1)
            throw std::invalid_argument("knot vector: multiplicity exceeds degree+1 at knot " +
                                        std::to_string(unique_[i]));
    }
    open_ = (mult_.front() == degree_ + 1) && (mult_.back() == degree_ + 1);
}

int find_span(const KnotVector& kv, double xi) {
    if (!(xi >= 0.0 && xi <= 1.0))
        throw std::domain_error("find_span: point outside [0,1]");
    const auto& t = kv.knots();
    const int n = kv.num_basis();
    const int p = kv.degree();
    // Domain of the spline is [t[p], t[n]]; the last element is closed on
    // the right so xi = 1 lands in span n-1 (for an open knot vector).
    if (xi >= t[n]) {
        int s = n - 1;
        while (s > p && t[s] == t[s + 1]) --s;
        return s;
    }
    if (xi <= t[p]) return p;
    // last index with t[s] <= xi
    auto it = std::upper_bound(t.begin() + p, t.begin() + n + 1, xi);
    return static_cast<int>(it - t.begin()) - 1;
}

BasisValues eval_basis(const KnotVector& kv, double xi) {
    const int p = kv.degree();
    const auto& t = kv.knots();
    BasisValues out;
    out.span = find_span(kv, xi);
    out.first_index = out.span - p;
    out.values.assign(p + 1, 0.0);

    // Cox-De Boor, triangular form: only the degree+1 functions with support
    // on the span are touched, all denominators are span lengths > 0.
    std::vector<double> left(p + 1), right(p + 1);
    out.values[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = xi - t[out.span + 1 - j];
        right[j] = t[out.span + j] - xi;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = out.values[r] / (right[r + 1] + left[j - r]);
            out.values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        out.values[j] = saved;
    }
    return out;
}

BasisValues eval_basis_derivatives(const KnotVector& kv, double xi, int order) {
    const int p = kv.degree();
    if (order < 0 || order > p)
        throw std::invalid_argument("eval_basis_derivatives: order must be in [0, degree]");
    const auto& t = kv.knots();

    BasisValues out;
    out.span = find_span(kv, xi);
    out.first_index = out.span - p;

    // Knot-difference recurrence (the standard inverted-triangle scheme):
    // ndu stores basis values of all lower degrees plus the knot differences.
    std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
    std::vector<double> left(p + 1), right(p + 1);
    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = xi - t[out.span + 1 - j];
        right[j] = t[out.span + j] - xi;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }

    out.values.resize(p + 1);
    for (int j = 0; j <= p; ++j) out.values[j] = ndu[j][p];

    out.derivatives.assign(order, std::vector<double>(p + 1, 0.0));
    std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= order; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = (rk >= -1) ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            out.derivatives[k - 1][r] = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= order; ++k) {
        for (int j = 0; j <= p; ++j) out.derivatives[k - 1][j] *= factor;
        factor *= p - k;
    }
    return out;
}

int continuity_at(const KnotVector& kv, double zeta) {
    const auto& z = kv.unique_knots();
    const auto& m = kv.multiplicities();
    for (std::size_t i = 1; i + 1 < z.size(); ++i) {
        if (z[i] == zeta) return kv.degree() - m[i];
    }
    throw std::invalid_argument("continuity_at: not an interior breakpoint");
}

double grading_map(double t, double exponent) {
    if (exponent == 1.0) return t;
    if (t <= 0.5) return 0.5 * std::pow(2.0 * t, exponent);
    return 1.0 - 0.5 * std::pow(2.0 * (1.0 - t), exponent);
}

KnotVector refined_knot_vector(int degree, int level, double grading_exponent) {
    if (degree < 1) throw std::invalid_argument("refined_knot_vector: degree must be >= 1");
    if (level < 1) throw std::invalid_argument("refined_knot_vector: level must be >= 1");
    if (grading_exponent < 1.0)
        throw std::invalid_argument("refined_knot_vector: grading exponent must be >= 1");

    const int n_el = 1 << level;
    std::vector<double> knots;
    knots.reserve(static_cast<std::size_t>(n_el) + 2 * degree + 1);
    knots.insert(knots.end(), degree + 1, 0.0);
    for (int j = 1; j < n_el; ++j) {
        // Dyadic parameter; exact in binary floating point, so breakpoints of
        // level L are bit-identical to the even breakpoints of level L+1.
        const double t = static_cast<double>(j) / static_cast<double>(n_el);
        knots.push_back(grading_map(t, grading_exponent));
    }
    knots.insert(knots.end(), degree + 1, 1.0);
    return KnotVector(std::move(knots), degree);
}

}  // namespace misciga
