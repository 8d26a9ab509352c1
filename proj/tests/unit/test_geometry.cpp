#include "misciga/geometry.hpp"

#include "misciga/errors.hpp"
#include "misciga/pde.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

using namespace misciga;

namespace {

constexpr double kPi = std::numbers::pi;

Patch scaled_square(double sx, double sy) {
    const Patch base = unit_square(1);
    std::vector<Point> cps = base.control_points();
    for (auto& p : cps) {
        p[0] *= sx;
        p[1] *= sy;
    }
    return Patch(2, base.knot_vectors(), std::move(cps));
}

}  // namespace

TEST_CASE("map_point: identity square, corners, domain check") {
    const Patch square = unit_square(1);
    const std::vector<double> xi = {0.3, 0.7};
    const Point x = map_point(square, xi);
    CHECK(x[0] == doctest::Approx(0.3));
    CHECK(x[1] == doctest::Approx(0.7));

    const std::vector<double> corner = {0.0, 0.0};
    const Point c = map_point(square, corner);
    CHECK(c[0] == doctest::Approx(0.0));
    CHECK(c[1] == doctest::Approx(0.0));

    const std::vector<double> outside = {1.2, 0.5};
    CHECK_THROWS_AS(map_point(square, outside), std::domain_error);
}

TEST_CASE("quarter annulus: exact radii and angles") {
    const Patch qa = quarter_annulus(1.0, 2.0);

    // inner edge maps exactly onto the radius-1 arc
    for (double s : {0.0, 0.17, 0.5, 0.83, 1.0}) {
        const std::vector<double> xi = {0.0, s};
        const Point x = map_point(qa, xi);
        CHECK(std::abs(std::hypot(x[0], x[1]) - 1.0) < 1e-12);
    }

    // containment: radius in [1,2], angle in [0, pi/2]
    for (int i = 0; i <= 8; ++i) {
        for (int j = 0; j <= 8; ++j) {
            const std::vector<double> xi = {i / 8.0, j / 8.0};
            const Point x = map_point(qa, xi);
            const double rho = std::hypot(x[0], x[1]);
            const double theta = std::atan2(x[1], x[0]);
            CHECK(rho > 1.0 - 1e-12);
            CHECK(rho < 2.0 + 1e-12);
            CHECK(theta > -1e-12);
            CHECK(theta < kPi / 2 + 1e-12);
        }
    }

    // symmetric control net: mid-parameter hits 45 degrees at the mid radius
    const std::vector<double> mid = {0.5, 0.5};
    const Point m = map_point(qa, mid);
    CHECK(std::hypot(m[0], m[1]) == doctest::Approx(1.5).epsilon(1e-13));
    CHECK(std::atan2(m[1], m[0]) == doctest::Approx(kPi / 4).epsilon(1e-13));
}

TEST_CASE("jacobian: identity, affine scaling, finite differences") {
    const Patch square = unit_square(1);
    const std::vector<double> xi = {0.4, 0.6};
    const JacobianMatrix j = jacobian(square, xi);
    CHECK(j.dx[0][0] == doctest::Approx(1.0));
    CHECK(j.dx[0][1] == doctest::Approx(0.0));
    CHECK(j.dx[1][0] == doctest::Approx(0.0));
    CHECK(j.dx[1][1] == doctest::Approx(1.0));

    const Patch affine = scaled_square(2.0, 3.0);
    const JacobianMatrix ja = jacobian(affine, xi);
    CHECK(ja.dx[0][0] == doctest::Approx(2.0));
    CHECK(ja.dx[1][1] == doctest::Approx(3.0));
    CHECK(ja.dx[0][1] == doctest::Approx(0.0));
    CHECK(ja.det() == doctest::Approx(6.0));

    const Patch qa = quarter_annulus(1.0, 2.0);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> interior(0.1, 0.9);
    for (int trial = 0; trial < 20; ++trial) {
        const std::vector<double> p = {interior(rng), interior(rng)};
        const JacobianMatrix jq = jacobian(qa, p);
        const double h = 1e-6;
        for (int dir = 0; dir < 2; ++dir) {
            std::vector<double> pp = p, pm = p;
            pp[dir] += h;
            pm[dir] -= h;
            const Point xp = map_point(qa, pp);
            const Point xm = map_point(qa, pm);
            for (int c = 0; c < 2; ++c) {
                const double fd = (xp[c] - xm[c]) / (2 * h);
                CHECK(jq.dx[c][dir] == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }

    // degenerate map: all control points on one line
    std::vector<Point> cps = square.control_points();
    for (auto& p : cps) p[1] = p[0];
    const Patch degenerate(2, square.knot_vectors(), std::move(cps));
    const std::vector<double> mid = {0.5, 0.5};
    CHECK_THROWS_AS(jacobian(degenerate, mid), GeometryError);
}

TEST_CASE("rational basis partition of unity (weights cancel)") {
    const Patch qa = quarter_annulus(1.0, 2.0);
    std::vector<Point> ones_net(qa.num_points(), Point{1.0, 1.0, 0.0});
    const Patch probe(2, qa.knot_vectors(), std::move(ones_net), qa.weights());
    for (double a : {0.0, 0.31, 0.5, 0.99}) {
        for (double b : {0.0, 0.2, 0.77, 1.0}) {
            const std::vector<double> xi = {a, b};
            const Point x = map_point(probe, xi);
            CHECK(x[0] == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(x[1] == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("quarter annulus area and ring volume") {
    const Patch qa = quarter_annulus(1.0, 2.0);
    const double area = patch_measure(qa, 3, 10);
    CHECK(std::abs(area - 3.0 * kPi / 4.0) < 1e-10);

    const Patch ring = thick_quarter_ring(1.0, 2.0, 1.0);
    const double volume = patch_measure(ring, 2, 8);
    CHECK(std::abs(volume - 3.0 * kPi / 4.0) < 1e-8);
}

TEST_CASE("thick quarter ring: extrusion structure") {
    const Patch ring = thick_quarter_ring(1.0, 2.0, 0.7);

    // z-slices are congruent quarter annuli
    for (double z1 : {0.0, 0.4, 1.0}) {
        for (double z2 : {0.25, 0.8}) {
            const std::vector<double> a = {0.3, 0.6, z1};
            const std::vector<double> b = {0.3, 0.6, z2};
            const Point xa = map_point(ring, a);
            const Point xb = map_point(ring, b);
            CHECK(xa[0] == doctest::Approx(xb[0]).epsilon(1e-13));
            CHECK(xa[1] == doctest::Approx(xb[1]).epsilon(1e-13));
            CHECK(xa[2] == doctest::Approx(0.7 * z1).epsilon(1e-13));
        }
    }

    // weights constant along the axial direction
    const auto shape = ring.net_shape();
    for (int a = 0; a < shape[0]; ++a)
        for (int b = 0; b < shape[1]; ++b) {
            const std::vector<int> i0 = {a, b, 0};
            for (int c = 1; c < shape[2]; ++c) {
                const std::vector<int> ic = {a, b, c};
                CHECK(ring.weights()[ring.net_index(ic)] ==
                      ring.weights()[ring.net_index(i0)]);
            }
        }

    CHECK(jacobian_sign_constant(ring, 10));
    CHECK(jacobian_sign_constant(quarter_annulus(1.0, 2.0), 10));
}

TEST_CASE("make_space: element counts and tensor structure") {
    const Patch square = unit_square(2);
    const std::vector<int> iso = {1, 1};
    const DiscretizationSpace s11 = make_space(square, iso, 1.0);
    CHECK(s11.patch().knot_vector(0).num_elements() == 2);
    CHECK(s11.patch().knot_vector(1).num_elements() == 2);
    CHECK(s11.num_basis() == 16);

    const std::vector<int> aniso = {2, 1};
    const DiscretizationSpace s21 = make_space(square, aniso, 1.0);
    CHECK(s21.patch().knot_vector(0).num_elements() == 4);
    CHECK(s21.patch().knot_vector(1).num_elements() == 2);
    // direction 1 unchanged by refining direction 0
    CHECK(s21.patch().knot_vector(1).knots() == s11.patch().knot_vector(1).knots());
}

TEST_CASE("geometry is exact in the refined space") {
    const Patch qa = quarter_annulus(1.0, 2.0);
    const std::vector<int> alpha = {2, 3};
    const DiscretizationSpace space = make_space(qa, alpha, 3.0);
    for (int i = 0; i <= 7; ++i) {
        for (int j = 0; j <= 7; ++j) {
            const std::vector<double> xi = {i / 7.0, j / 7.0};
            const Point orig = map_point(qa, xi);
            const Point refined = map_point(space.patch(), xi);
            CHECK(std::abs(orig[0] - refined[0]) < 1e-13);
            CHECK(std::abs(orig[1] - refined[1]) < 1e-13);
        }
    }
}

TEST_CASE("patch file round trip") {
    for (const Patch& patch :
         {quarter_annulus(1.0, 2.0), thick_quarter_ring(1.0, 2.0, 1.0), unit_square(2)}) {
        std::stringstream ss;
        write_patch(ss, patch);
        const Patch back = read_patch(ss);
        CHECK(back.dim() == patch.dim());
        CHECK(back.net_shape() == patch.net_shape());
        CHECK(back.weights() == patch.weights());
        for (std::size_t i = 0; i < patch.num_points(); ++i)
            for (int c = 0; c < patch.dim(); ++c)
                CHECK(back.control_points()[i][c] == patch.control_points()[i][c]);
        for (int k = 0; k < patch.dim(); ++k)
            CHECK(back.knot_vector(k).knots() == patch.knot_vector(k).knots());
    }

    std::stringstream bad("misciga-patch 2\n");
    CHECK_THROWS_AS(read_patch(bad), std::invalid_argument);
}
