#pragma once

#include <span>
#include <vector>

namespace misciga {

/// Univariate B-spline space: a non-decreasing knot vector on [0,1] together
/// with a polynomial degree. The number of basis functions is
/// n = knots.size() - degree - 1.
class KnotVector {
public:
    /// Validates monotonicity, the [0,1] range, and multiplicity bounds.
    /// Throws std::invalid_argument on violation.
    KnotVector(std::vector<double> knots, int degree);

    int degree() const { return degree_; }
    const std::vector<double>& knots() const { return knots_; }

    /// Number of basis functions n.
    int num_basis() const { return static_cast<int>(knots_.size()) - degree_ - 1; }

    /// Number of non-empty elements.
    int num_elements() const { return static_cast<int>(unique_.size()) - 1; }

    /// Knots without repetition (the breakpoints Z).
    const std::vector<double>& unique_knots() const { return unique_; }

    /// Multiplicity of each unique knot, same indexing as unique_knots().
    const std::vector<int>& multiplicities() const { return mult_; }

    /// True iff first and last knot both have multiplicity degree+1.
    bool is_open() const { return open_; }

private:
    std::vector<double> knots_;
    int degree_ = 1;
    std::vector<double> unique_;
    std::vector<int> mult_;
    bool open_ = false;
};

/// Nonzero basis functions (and optional derivative rows) at one point.
/// values[j] belongs to global basis index first_index + j.
struct BasisValues {
    int span = 0;         ///< knot span: knots[span] <= xi < knots[span+1]
    int first_index = 0;  ///< global index of the first of the degree+1 functions
    std::vector<double> values;
    std::vector<std::vector<double>> derivatives;  ///< derivatives[k-1] = k-th order row
};

/// Index of the non-empty knot span containing xi; the last span is closed
/// on the right so xi = 1 is valid. Throws std::domain_error outside [0,1].
int find_span(const KnotVector& kv, double xi);

/// The degree+1 basis values at xi via the Cox-De Boor recursion (0/0 = 0).
/// For an open knot vector the values are nonnegative and sum to one.
BasisValues eval_basis(const KnotVector& kv, double xi);

/// Basis values plus derivative rows up to `order`. Throws
/// std::invalid_argument if order exceeds the degree.
BasisValues eval_basis_derivatives(const KnotVector& kv, double xi, int order);

/// Continuity class p - m at a unique interior knot with multiplicity m.
/// Throws std::invalid_argument if zeta is not an interior breakpoint.
int continuity_at(const KnotVector& kv, double zeta);

/// Open knot vector with 2^level elements and single interior knots.
/// Breakpoints are the dyadic grid {j/2^level} pushed through a symmetric
/// power law with the given exponent (1 = uniform); exponents > 1 cluster
/// elements towards both ends of [0,1].
KnotVector refined_knot_vector(int degree, int level, double grading_exponent);

/// Applies the symmetric power-law grading map to t in [0,1].
double grading_map(double t, double exponent);

}  // namespace misciga
