#include "misciga/geometry.hpp"

#include "misciga/errors.hpp"
#include "misciga/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace misciga {

Patch::Patch(int dim, std::vector<KnotVector> knot_vectors,
             std::vector<Point> control_points, std::vector<double> weights)
    : dim_(dim), kvs_(std::move(knot_vectors)), cps_(std::move(control_points)),
      weights_(std::move(weights)) {
    if (dim_ != 2 && dim_ != 3)
        throw std::invalid_argument("patch: dim must be 2 or 3");
    if (static_cast<int>(kvs_.size()) != dim_)
        throw std::invalid_argument("patch: need one knot vector per direction");
    std::size_t expected = 1;
    for (const auto& kv : kvs_) {
        if (!kv.is_open())
            throw std::invalid_argument("patch: knot vectors must be open");
        expected *= static_cast<std::size_t>(kv.num_basis());
    }
    if (cps_.size() != expected)
        throw std::invalid_argument("patch: control net shape mismatch");
    if (!weights_.empty()) {
        if (weights_.size() != expected)
            throw std::invalid_argument("patch: weight array shape mismatch");
        for (double w : weights_)
            if (!(w > 0.0)) throw std::invalid_argument("patch: weights must be positive");
    }
}

std::vector<int> Patch::net_shape() const {
    std::vector<int> shape(dim_);
    for (int k = 0; k < dim_; ++k) shape[k] = kvs_[k].num_basis();
    return shape;
}

std::size_t Patch::net_index(std::span<const int> idx) const {
    std::size_t flat = 0;
    for (int k = 0; k < dim_; ++k)
        flat = flat * static_cast<std::size_t>(kvs_[k].num_basis()) +
               static_cast<std::size_t>(idx[k]);
    return flat;
}

double JacobianMatrix::det() const {
    if (dim == 2) return dx[0][0] * dx[1][1] - dx[0][1] * dx[1][0];
    return dx[0][0] * (dx[1][1] * dx[2][2] - dx[1][2] * dx[2][1]) -
           dx[0][1] * (dx[1][0] * dx[2][2] - dx[1][2] * dx[2][0]) +
           dx[0][2] * (dx[1][0] * dx[2][1] - dx[1][1] * dx[2][0]);
}

MapDerivatives map_derivatives(const Patch& patch, std::span<const double> xi) {
    const int d = patch.dim();
    if (static_cast<int>(xi.size()) != d)
        throw std::domain_error("map_derivatives: point dimension mismatch");

    std::array<BasisValues, 3> bv;
    for (int k = 0; k < d; ++k)
        bv[k] = eval_basis_derivatives(patch.knot_vector(k), xi[k], 1);

    // Homogeneous accumulation: numerator A = sum w_i P_i B_i and W = sum
    // w_i B_i, plus their parametric gradients. For a polynomial patch the
    // weights are implicitly one and W collapses to the partition of unity.
    Point a{};
    std::array<Point, 3> a_grad{};
    double w_sum = 0.0;
    std::array<double, 3> w_grad{};

    const bool rational = patch.is_nurbs();
    std::array<int, 3> local{};
    std::array<int, 3> global{};
    const int p0 = patch.knot_vector(0).degree();
    const int p1 = patch.knot_vector(1).degree();
    const int p2 = d == 3 ? patch.knot_vector(2).degree() : 0;

    for (local[0] = 0; local[0] <= p0; ++local[0]) {
        for (local[1] = 0; local[1] <= p1; ++local[1]) {
            for (local[2] = 0; local[2] <= p2; ++local[2]) {
                for (int k = 0; k < d; ++k) global[k] = bv[k].first_index + local[k];
                const std::size_t flat = patch.net_index({global.data(), static_cast<std::size_t>(d)});
                const double w = rational ? patch.weights()[flat] : 1.0;
                const Point& cp = patch.control_points()[flat];

                double value = w;
                std::array<double, 3> dvalue{w, w, w};
                for (int k = 0; k < d; ++k) {
                    const double s = bv[k].values[local[k]];
                    const double ds = bv[k].derivatives[0][local[k]];
                    value *= s;
                    for (int l = 0; l < d; ++l) dvalue[l] *= (l == k) ? ds : s;
                }

                w_sum += value;
                for (int c = 0; c < d; ++c) a[c] += value * cp[c];
                for (int l = 0; l < d; ++l) {
                    w_grad[l] += dvalue[l];
                    for (int c = 0; c < d; ++c) a_grad[l][c] += dvalue[l] * cp[c];
                }
            }
        }
    }

    MapDerivatives out;
    out.jac.dim = d;
    const double inv_w = 1.0 / w_sum;
    for (int c = 0; c < d; ++c) out.x[c] = a[c] * inv_w;
    for (int l = 0; l < d; ++l)
        for (int c = 0; c < d; ++c)
            out.jac.dx[c][l] = (a_grad[l][c] - out.x[c] * w_grad[l]) * inv_w;
    return out;
}

Point map_point(const Patch& patch, std::span<const double> xi) {
    return map_derivatives(patch, xi).x;
}

JacobianMatrix jacobian(const Patch& patch, std::span<const double> xi) {
    JacobianMatrix jac = map_derivatives(patch, xi).jac;
    if (std::abs(jac.det()) < 1e-14)
        throw GeometryError("jacobian: geometry map is degenerate at the query point");
    return jac;
}

namespace {

KnotVector bezier_quadratic_kv() {
    return KnotVector({0.0, 0.0, 0.0, 1.0, 1.0, 1.0}, 2);
}

}  // namespace

Patch quarter_annulus(double r_in, double r_out) {
    if (!(0.0 < r_in && r_in < r_out))
        throw std::invalid_argument("quarter_annulus: need 0 < r_in < r_out");

    // Single-arc 90 degree NURBS: corner weights 1, middle weight sqrt(2)/2.
    // The radial direction is linear, written directly in degree-elevated
    // (quadratic Bezier) form so both directions share degree 2.
    const double s = std::sqrt(2.0) / 2.0;
    const double arc_x[3] = {1.0, 1.0, 0.0};
    const double arc_y[3] = {0.0, 1.0, 1.0};
    const double arc_w[3] = {1.0, s, 1.0};
    const double radii[3] = {r_in, 0.5 * (r_in + r_out), r_out};

    std::vector<Point> cps(9);
    std::vector<double> weights(9);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            cps[a * 3 + b] = {radii[a] * arc_x[b], radii[a] * arc_y[b], 0.0};
            weights[a * 3 + b] = arc_w[b];
        }
    }
    Patch patch(2, {bezier_quadratic_kv(), bezier_quadratic_kv()}, std::move(cps),
                std::move(weights));
    if (!jacobian_sign_constant(patch, 5))
        throw GeometryError("quarter_annulus: degenerate parameterization");
    return patch;
}

Patch thick_quarter_ring(double r_in, double r_out, double height) {
    if (!(0.0 < r_in && r_in < r_out) || !(height > 0.0))
        throw std::invalid_argument("thick_quarter_ring: invalid dimensions");

    const double s = std::sqrt(2.0) / 2.0;
    const double arc_x[3] = {1.0, 1.0, 0.0};
    const double arc_y[3] = {0.0, 1.0, 1.0};
    const double arc_w[3] = {1.0, s, 1.0};
    const double radii[3] = {r_in, 0.5 * (r_in + r_out), r_out};
    const double zs[3] = {0.0, 0.5 * height, height};

    std::vector<Point> cps(27);
    std::vector<double> weights(27);
    for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) {
            for (int c = 0; c < 3; ++c) {
                const std::size_t flat = static_cast<std::size_t>((a * 3 + b) * 3 + c);
                cps[flat] = {radii[a] * arc_x[b], radii[a] * arc_y[b], zs[c]};
                weights[flat] = arc_w[b];
            }
        }
    }
    Patch patch(3, {bezier_quadratic_kv(), bezier_quadratic_kv(), bezier_quadratic_kv()},
                std::move(cps), std::move(weights));
    if (!jacobian_sign_constant(patch, 4))
        throw GeometryError("thick_quarter_ring: degenerate parameterization");
    return patch;
}

namespace {

using Homogeneous = std::array<double, 4>;

std::vector<Homogeneous> homogenize(const Patch& patch) {
    std::vector<Homogeneous> h(patch.num_points());
    const bool rational = patch.is_nurbs();
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double w = rational ? patch.weights()[i] : 1.0;
        const Point& p = patch.control_points()[i];
        h[i] = {w * p[0], w * p[1], w * p[2], w};
    }
    return h;
}

/// Boehm single-knot insertion applied to every net line along `direction`.
void boehm_insert(std::vector<Homogeneous>& net, std::vector<int>& shape,
                  KnotVector& kv, int direction, double u) {
    const int p = kv.degree();
    const int span = find_span(kv, u);
    const auto& t = kv.knots();
    const int n_old = shape[direction];

    std::size_t inner = 1, outer = 1;
    for (std::size_t k = direction + 1; k < shape.size(); ++k) inner *= shape[k];
    for (int k = 0; k < direction; ++k) outer *= shape[k];

    std::vector<Homogeneous> result(net.size() + inner * outer);
    const std::size_t stride_old = static_cast<std::size_t>(n_old) * inner;
    const std::size_t stride_new = static_cast<std::size_t>(n_old + 1) * inner;

    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            auto old_at = [&](int i) -> const Homogeneous& {
                return net[o * stride_old + static_cast<std::size_t>(i) * inner + in];
            };
            auto new_at = [&](int i) -> Homogeneous& {
                return result[o * stride_new + static_cast<std::size_t>(i) * inner + in];
            };
            for (int i = 0; i <= span - p; ++i) new_at(i) = old_at(i);
            for (int i = span - p + 1; i <= span; ++i) {
                const double denom = t[i + p] - t[i];
                const double a = (u - t[i]) / denom;
                for (int c = 0; c < 4; ++c)
                    new_at(i)[c] = a * old_at(i)[c] + (1.0 - a) * old_at(i - 1)[c];
            }
            for (int i = span + 1; i <= n_old; ++i) new_at(i) = old_at(i - 1);
        }
    }

    std::vector<double> knots = t;
    knots.insert(std::upper_bound(knots.begin(), knots.end(), u), u);
    kv = KnotVector(std::move(knots), p);
    shape[direction] = n_old + 1;
    net = std::move(result);
}

Patch dehomogenize(int dim, std::vector<KnotVector> kvs, std::vector<Homogeneous> net,
                   bool rational) {
    std::vector<Point> cps(net.size());
    std::vector<double> weights;
    if (rational) weights.resize(net.size());
    for (std::size_t i = 0; i < net.size(); ++i) {
        const double w = net[i][3];
        cps[i] = {net[i][0] / w, net[i][1] / w, net[i][2] / w};
        if (rational) weights[i] = w;
    }
    return Patch(dim, std::move(kvs), std::move(cps), std::move(weights));
}

}  // namespace

Patch insert_knots(const Patch& patch, int direction, std::span<const double> values) {
    if (direction < 0 || direction >= patch.dim())
        throw std::invalid_argument("insert_knots: direction out of range");
    if (values.empty()) return patch;

    auto net = homogenize(patch);
    auto shape = patch.net_shape();
    auto kvs = patch.knot_vectors();
    for (double u : values) {
        if (!(u > 0.0 && u < 1.0))
            throw std::invalid_argument("insert_knots: knots must be interior");
        boehm_insert(net, shape, kvs[direction], direction, u);
    }
    return dehomogenize(patch.dim(), std::move(kvs), std::move(net), patch.is_nurbs());
}

DiscretizationSpace::DiscretizationSpace(Patch refined, MultiIndex alpha, double grading)
    : refined_(std::move(refined)), alpha_(std::move(alpha)), grading_(grading) {}

DiscretizationSpace make_space(const Patch& geometry, std::span<const int> alpha,
                               double grading_exponent) {
    if (static_cast<int>(alpha.size()) != geometry.dim())
        throw std::invalid_argument("make_space: alpha length must equal patch dim");
    Patch refined = geometry;
    for (int k = 0; k < geometry.dim(); ++k) {
        if (alpha[k] < 1) throw std::invalid_argument("make_space: levels must be >= 1");
        const KnotVector target =
            refined_knot_vector(geometry.knot_vector(k).degree(), alpha[k], grading_exponent);

        // Knots to add = target breakpoints missing from the geometry, each to
        // multiplicity one; geometry breakpoints keep their multiplicity, so
        // the map is represented exactly in the refined space.
        std::map<double, int> have;
        const auto& gz = refined.knot_vector(k).unique_knots();
        const auto& gm = refined.knot_vector(k).multiplicities();
        for (std::size_t i = 0; i < gz.size(); ++i) have[gz[i]] = gm[i];

        std::vector<double> to_insert;
        const auto& tz = target.unique_knots();
        for (std::size_t i = 1; i + 1 < tz.size(); ++i)
            if (!have.count(tz[i])) to_insert.push_back(tz[i]);
        refined = insert_knots(refined, k, to_insert);
    }
    return DiscretizationSpace(std::move(refined), MultiIndex(alpha.begin(), alpha.end()),
                               grading_exponent);
}

double patch_measure(const Patch& patch, int level, int gauss_order) {
    const int d = patch.dim();
    const DiscretizationSpace space =
        make_space(patch, MultiIndex(static_cast<std::size_t>(d), level), 1.0);
    const Patch& p = space.patch();
    const QuadratureRule gauss = gauss_legendre_01(gauss_order);

    std::vector<std::vector<double>> breaks(d);
    std::vector<int> n_el(d);
    for (int k = 0; k < d; ++k) {
        breaks[k] = p.knot_vector(k).unique_knots();
        n_el[k] = p.knot_vector(k).num_elements();
    }

    double total = 0.0;
    std::vector<int> el(d, 0);
    std::vector<int> q(d, 0);
    std::vector<double> xi(d);
    bool more_elements = true;
    while (more_elements) {
        std::fill(q.begin(), q.end(), 0);
        bool more_points = true;
        while (more_points) {
            double w = 1.0;
            for (int k = 0; k < d; ++k) {
                const double lo = breaks[k][el[k]];
                const double hi = breaks[k][el[k] + 1];
                xi[k] = lo + (hi - lo) * gauss.nodes[q[k]];
                w *= (hi - lo) * gauss.weights[q[k]];
            }
            total += std::abs(map_derivatives(p, xi).jac.det()) * w;
            more_points = false;
            for (int k = d - 1; k >= 0; --k) {
                if (++q[k] < gauss_order) {
                    more_points = true;
                    break;
                }
                q[k] = 0;
            }
        }
        more_elements = false;
        for (int k = d - 1; k >= 0; --k) {
            if (++el[k] < n_el[k]) {
                more_elements = true;
                break;
            }
            el[k] = 0;
        }
    }
    return total;
}

bool jacobian_sign_constant(const Patch& patch, int samples_per_dir) {
    const int d = patch.dim();
    std::vector<double> xi(d);
    std::vector<int> idx(d, 0);
    double sign = 0.0;
    while (true) {
        for (int k = 0; k < d; ++k)
            xi[k] = (idx[k] + 0.5) / samples_per_dir;
        const double det = map_derivatives(patch, xi).jac.det();
        if (det == 0.0) return false;
        if (sign == 0.0) sign = det > 0 ? 1.0 : -1.0;
        else if (det * sign <= 0.0) return false;
        int k = d - 1;
        for (; k >= 0; --k) {
            if (++idx[k] < samples_per_dir) break;
            idx[k] = 0;
        }
        if (k < 0) break;
    }
    return true;
}

}  // namespace misciga
