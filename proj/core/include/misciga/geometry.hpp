#pragma once

#include "misciga/multi_index.hpp"
#include "misciga/splines.hpp"

#include <array>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace misciga {

using Point = std::array<double, 3>;

/// Tensor-product B-spline/NURBS patch: d knot vectors, a control net stored
/// flat with the last parametric direction varying fastest, and optional
/// strictly positive weights (present = rational basis).
class Patch {
public:
    Patch(int dim, std::vector<KnotVector> knot_vectors,
          std::vector<Point> control_points, std::vector<double> weights = {});

    int dim() const { return dim_; }
    const std::vector<KnotVector>& knot_vectors() const { return kvs_; }
    const KnotVector& knot_vector(int direction) const { return kvs_[direction]; }
    const std::vector<Point>& control_points() const { return cps_; }
    const std::vector<double>& weights() const { return weights_; }
    bool is_nurbs() const { return !weights_.empty(); }

    std::vector<int> net_shape() const;
    std::size_t num_points() const { return cps_.size(); }

    /// Flat index of a control point from its per-direction indices.
    std::size_t net_index(std::span<const int> idx) const;

private:
    int dim_;
    std::vector<KnotVector> kvs_;
    std::vector<Point> cps_;
    std::vector<double> weights_;
};

/// d x d Jacobian, entries dx[k][l] = d x_k / d xi_l.
struct JacobianMatrix {
    int dim = 0;
    std::array<std::array<double, 3>, 3> dx{};
    double det() const;
};

/// Geometry map and its first derivatives at one parametric point.
struct MapDerivatives {
    Point x{};
    JacobianMatrix jac;
};

/// Image of a parametric point under the patch map (rational if weighted).
/// Throws std::domain_error for xi outside the unit cube.
Point map_point(const Patch& patch, std::span<const double> xi);

/// Jacobian of the patch map; throws GeometryError when |det| < 1e-14.
JacobianMatrix jacobian(const Patch& patch, std::span<const double> xi);

MapDerivatives map_derivatives(const Patch& patch, std::span<const double> xi);

/// Exact quarter annulus r_in <= r <= r_out, 0 <= theta <= pi/2, as a
/// degree (2,2) NURBS patch (radial direction degree-elevated from linear).
/// Direction 0 is radial, direction 1 angular.
Patch quarter_annulus(double r_in, double r_out);

/// Quarter annulus extruded to height in z; degrees (2,2,2) after elevating
/// the radial and axial directions. Direction 2 is axial.
Patch thick_quarter_ring(double r_in, double r_out, double height);

/// Inserts each value once into the knot vector of one direction, carrying
/// the control net (and weights) along so the map is unchanged.
Patch insert_knots(const Patch& patch, int direction, std::span<const double> values);

/// Solution space over a fixed geometry: the geometry refined by knot
/// insertion to 2^alpha_i elements per direction (plus any geometry
/// breakpoints), carrying the same map.
class DiscretizationSpace {
public:
    DiscretizationSpace(Patch refined, MultiIndex alpha, double grading);

    const Patch& patch() const { return refined_; }
    const MultiIndex& levels() const { return alpha_; }
    double grading() const { return grading_; }
    int dim() const { return refined_.dim(); }
    /// Total number of tensor-product basis functions.
    std::size_t num_basis() const { return refined_.num_points(); }

private:
    Patch refined_;
    MultiIndex alpha_;
    double grading_;
};

/// Builds the refined solution space at spatial levels alpha (>= 1 each).
DiscretizationSpace make_space(const Patch& geometry, std::span<const int> alpha,
                               double grading_exponent);

/// Measure of the patch image, by Gauss quadrature of |det J| over the
/// elements of a level-`level` refinement.
double patch_measure(const Patch& patch, int level, int gauss_order);

/// True if det J keeps one sign over a uniform sample grid (injectivity spot
/// check used by the built-in constructors).
bool jacobian_sign_constant(const Patch& patch, int samples_per_dir);

/// Plain-text patch file format (see README): dim, degrees, knot vectors,
/// control points row-major (last direction fastest), optional weights.
void write_patch(std::ostream& os, const Patch& patch);
Patch read_patch(std::istream& is);
void write_patch_file(const std::string& path, const Patch& patch);
Patch read_patch_file(const std::string& path);

}  // namespace misciga
