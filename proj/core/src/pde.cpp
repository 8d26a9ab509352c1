#include "misciga/pde.hpp"

#include "misciga/errors.hpp"
#include "misciga/quadrature.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace misciga {

namespace {

constexpr double kPi = std::numbers::pi;

/// Univariate basis data at every element Gauss point of one direction.
struct DirectionTable {
    int n_gauss = 0;
    std::vector<double> breaks;
    std::vector<BasisValues> basis;  ///< index e * n_gauss + g
    std::vector<double> jw;          ///< element-scaled Gauss weight
};

DirectionTable build_table(const KnotVector& kv, int n_gauss) {
    DirectionTable t;
    t.n_gauss = n_gauss;
    t.breaks = kv.unique_knots();
    const QuadratureRule gauss = gauss_legendre_01(n_gauss);
    const int n_el = kv.num_elements();
    t.basis.reserve(static_cast<std::size_t>(n_el) * n_gauss);
    t.jw.reserve(t.basis.capacity());
    for (int e = 0; e < n_el; ++e) {
        const double lo = t.breaks[e];
        const double hi = t.breaks[e + 1];
        for (int g = 0; g < n_gauss; ++g) {
            t.basis.push_back(eval_basis_derivatives(kv, lo + (hi - lo) * gauss.nodes[g], 1));
            t.jw.push_back((hi - lo) * gauss.weights[g]);
        }
    }
    return t;
}

struct Quadrature2 {  // inverse-transpose application helpers
    static void invert(const JacobianMatrix& j, double det, double inv[3][3]) {
        if (j.dim == 2) {
            inv[0][0] = j.dx[1][1] / det;
            inv[0][1] = -j.dx[0][1] / det;
            inv[1][0] = -j.dx[1][0] / det;
            inv[1][1] = j.dx[0][0] / det;
        } else {
            const auto& a = j.dx;
            inv[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
            inv[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
            inv[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
            inv[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
            inv[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
            inv[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
            inv[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
            inv[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
            inv[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
        }
    }
};

/// Shared element-loop state for assembly and functional evaluation.
struct ElementContext {
    const Patch* patch = nullptr;
    int dim = 0;
    bool rational = false;
    std::vector<DirectionTable> tables;
    std::vector<int> shape;      // basis count per direction
    std::vector<int> local_ext;  // degree+1 per direction
    int local_size = 1;

    explicit ElementContext(const DiscretizationSpace& space) {
        patch = &space.patch();
        dim = patch->dim();
        rational = patch->is_nurbs();
        shape = patch->net_shape();
        for (int k = 0; k < dim; ++k) {
            const KnotVector& kv = patch->knot_vector(k);
            tables.push_back(build_table(kv, kv.degree() + 1));
            local_ext.push_back(kv.degree() + 1);
            local_size *= kv.degree() + 1;
        }
    }

    int num_elements(int k) const { return static_cast<int>(tables[k].breaks.size()) - 1; }

    /// Flat net index of local function `l` on element tuple `el`.
    std::size_t global_index(std::span<const int> el, int l) const {
        std::size_t flat = 0;
        for (int k = 0; k < dim; ++k) {
            int rem = l;
            for (int k2 = dim - 1; k2 > k; --k2) rem /= local_ext[k2];
            const int loc = rem % local_ext[k];
            const BasisValues& bv = tables[k].basis[static_cast<std::size_t>(el[k]) * tables[k].n_gauss];
            flat = flat * shape[k] + (bv.first_index + loc);
        }
        return flat;
    }
};

/// Values, parametric gradients and geometry data at one Gauss point.
struct PointData {
    Point x{};
    double det = 0.0;
    double scale = 0.0;                  // |det J| * prod jw
    std::vector<double> value;           // R_i
    std::vector<std::array<double, 3>> grad_phys;  // physical gradient of R_i
};

void evaluate_point(const ElementContext& ctx, std::span<const int> el,
                    std::span<const int> gp, bool need_gradients, PointData& out) {
    const int d = ctx.dim;
    const int L = ctx.local_size;
    out.value.assign(L, 0.0);
    if (need_gradients) out.grad_phys.assign(L, {0.0, 0.0, 0.0});

    const BasisValues* bv[3] = {};
    double jw_product = 1.0;
    for (int k = 0; k < d; ++k) {
        const auto& t = ctx.tables[k];
        const std::size_t at = static_cast<std::size_t>(el[k]) * t.n_gauss + gp[k];
        bv[k] = &t.basis[at];
        jw_product *= t.jw[at];
    }

    // Tensor-product values B_i and parametric derivatives dB_i, then the
    // homogeneous sums that give the map, Jacobian and rational basis.
    thread_local std::vector<double> b;
    thread_local std::vector<std::array<double, 3>> db;
    b.assign(L, 0.0);
    db.assign(L, {0.0, 0.0, 0.0});

    std::array<int, 3> loc{};
    for (int l = 0; l < L; ++l) {
        int rem = l;
        for (int k = d - 1; k >= 0; --k) {
            loc[k] = rem % ctx.local_ext[k];
            rem /= ctx.local_ext[k];
        }
        double value = 1.0;
        std::array<double, 3> dvalue{1.0, 1.0, 1.0};
        for (int k = 0; k < d; ++k) {
            const double s = bv[k]->values[loc[k]];
            const double ds = bv[k]->derivatives[0][loc[k]];
            value *= s;
            for (int m = 0; m < d; ++m) dvalue[m] *= (m == k) ? ds : s;
        }
        b[l] = value;
        db[l] = dvalue;
    }

    double w_sum = 0.0;
    std::array<double, 3> w_grad{};
    Point a{};
    std::array<Point, 3> a_grad{};
    thread_local std::vector<double> wloc;
    thread_local std::vector<const Point*> ploc;
    wloc.assign(L, 1.0);
    ploc.assign(L, nullptr);
    for (int l = 0; l < L; ++l) {
        const std::size_t flat = ctx.global_index(el, l);
        if (ctx.rational) wloc[l] = ctx.patch->weights()[flat];
        ploc[l] = &ctx.patch->control_points()[flat];
        const double wb = wloc[l] * b[l];
        w_sum += wb;
        for (int c = 0; c < d; ++c) a[c] += wb * (*ploc[l])[c];
        for (int m = 0; m < d; ++m) {
            const double wdb = wloc[l] * db[l][m];
            w_grad[m] += wdb;
            for (int c = 0; c < d; ++c) a_grad[m][c] += wdb * (*ploc[l])[c];
        }
    }

    const double inv_w = 1.0 / w_sum;
    JacobianMatrix jac;
    jac.dim = d;
    for (int c = 0; c < d; ++c) out.x[c] = a[c] * inv_w;
    for (int m = 0; m < d; ++m)
        for (int c = 0; c < d; ++c)
            jac.dx[c][m] = (a_grad[m][c] - out.x[c] * w_grad[m]) * inv_w;
    out.det = jac.det();
    if (std::abs(out.det) < 1e-14)
        throw AssemblyError("assemble: degenerate geometry Jacobian inside an element");
    out.scale = std::abs(out.det) * jw_product;

    double inv[3][3];
    if (need_gradients) Quadrature2::invert(jac, out.det, inv);

    for (int l = 0; l < L; ++l) {
        const double r = wloc[l] * b[l] * inv_w;
        out.value[l] = r;
        if (!need_gradients) continue;
        std::array<double, 3> gpar{};
        for (int m = 0; m < d; ++m)
            gpar[m] = wloc[l] * db[l][m] * inv_w - r * w_grad[m] * inv_w;
        for (int c = 0; c < d; ++c) {
            double g = 0.0;
            for (int m = 0; m < d; ++m) g += inv[m][c] * gpar[m];
            out.grad_phys[l][c] = g;
        }
    }
}

template <typename Body>
void for_each_tuple(std::span<const int> extents, Body&& body) {
    const int d = static_cast<int>(extents.size());
    std::vector<int> idx(d, 0);
    for (;;) {
        body(std::span<const int>(idx));
        int k = d - 1;
        for (; k >= 0; --k) {
            if (++idx[k] < extents[k]) break;
            idx[k] = 0;
        }
        if (k < 0) return;
    }
}

std::vector<int> number_dofs(const DiffusionProblem& problem, const ElementContext& ctx,
                             int* num_dofs) {
    const int d = ctx.dim;
    std::vector<int> dof(ctx.patch->num_points(), -1);
    int next = 0;
    std::vector<int> extents = ctx.shape;
    for_each_tuple(extents, [&](std::span<const int> idx) {
        bool constrained = false;
        for (int k = 0; k < d; ++k) {
            if ((idx[k] == 0 && problem.dirichlet[2 * k]) ||
                (idx[k] == ctx.shape[k] - 1 && problem.dirichlet[2 * k + 1]))
                constrained = true;
        }
        const std::size_t flat = ctx.patch->net_index(idx);
        dof[flat] = constrained ? -1 : next++;
    });
    *num_dofs = next;
    return dof;
}

}  // namespace

AssembledSystem assemble(const DiffusionProblem& problem, const DiscretizationSpace& space,
                         std::span<const double> y) {
    const ElementContext ctx(space);
    const int d = ctx.dim;
    const int L = ctx.local_size;

    AssembledSystem sys;
    sys.dof_of_basis = number_dofs(problem, ctx, &sys.num_dofs);
    sys.load = Eigen::VectorXd::Zero(sys.num_dofs);

    std::vector<Eigen::Triplet<double>> triplets;
    std::size_t n_elements = 1;
    std::vector<int> el_extents(d), gp_extents(d);
    for (int k = 0; k < d; ++k) {
        el_extents[k] = ctx.num_elements(k);
        gp_extents[k] = ctx.tables[k].n_gauss;
        n_elements *= static_cast<std::size_t>(el_extents[k]);
    }
    triplets.reserve(n_elements * static_cast<std::size_t>(L) * L);

    Eigen::MatrixXd k_local(L, L);
    Eigen::VectorXd f_local(L);
    PointData pt;
    std::vector<int> global_dof(L);

    for_each_tuple(el_extents, [&](std::span<const int> el) {
        k_local.setZero();
        f_local.setZero();
        for_each_tuple(gp_extents, [&](std::span<const int> gp) {
            evaluate_point(ctx, el, gp, true, pt);
            const double a_val = problem.coefficient(pt.x, y);
            if (!(a_val > 0.0) || !std::isfinite(a_val))
                throw AssemblyError("assemble: coefficient not positive at a quadrature point");
            const double f_val = problem.rhs(pt.x);
            const double sa = a_val * pt.scale;
            for (int i = 0; i < L; ++i) {
                f_local(i) += f_val * pt.value[i] * pt.scale;
                for (int j = 0; j <= i; ++j) {
                    double dot = 0.0;
                    for (int c = 0; c < d; ++c)
                        dot += pt.grad_phys[i][c] * pt.grad_phys[j][c];
                    k_local(i, j) += sa * dot;
                }
            }
        });
        for (int i = 0; i < L; ++i)
            global_dof[i] = sys.dof_of_basis[ctx.global_index(el, i)];
        for (int i = 0; i < L; ++i) {
            if (global_dof[i] < 0) continue;
            sys.load(global_dof[i]) += f_local(i);
            for (int j = 0; j < L; ++j) {
                if (global_dof[j] < 0) continue;
                const double v = (j <= i) ? k_local(i, j) : k_local(j, i);
                triplets.emplace_back(global_dof[i], global_dof[j], v);
            }
        }
    });

    sys.matrix.resize(sys.num_dofs, sys.num_dofs);
    sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return sys;
}

DiscreteSolution solve_system(const DiffusionProblem& problem, const DiscretizationSpace& space,
                              std::span<const double> y) {
    AssembledSystem sys = assemble(problem, space, y);
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver;
    solver.compute(sys.matrix);
    if (solver.info() != Eigen::Success)
        throw AssemblyError("solve_system: factorization failed");
    if (sys.num_dofs > 0 && solver.vectorD().minCoeff() <= 0.0)
        throw AssemblyError("solve_system: stiffness matrix is not positive definite");
    DiscreteSolution sol{space, solver.solve(sys.load), std::move(sys.dof_of_basis)};
    if (solver.info() != Eigen::Success)
        throw AssemblyError("solve_system: back substitution failed");
    return sol;
}

double solve_sample(const DiffusionProblem& problem, std::span<const int> alpha,
                    std::span<const double> y) {
    const DiscretizationSpace space =
        make_space(problem.patch, alpha, problem.grading_exponent);
    return evaluate_functional(solve_system(problem, space, y), problem.functional);
}

double evaluate_functional(const DiscretizationSpace& space,
                           std::span<const double> net_coefficients,
                           const Functional& functional) {
    if (net_coefficients.size() != space.num_basis())
        throw std::invalid_argument("evaluate_functional: coefficient count mismatch");
    const ElementContext ctx(space);
    const int d = ctx.dim;

    if (functional.kind == Functional::Kind::point_value) {
        // Newton inversion of the patch map for the parametric preimage.
        const Patch& p = space.patch();
        std::vector<double> xi(d, 0.5);
        bool converged = false;
        for (int iter = 0; iter < 100; ++iter) {
            const MapDerivatives md = map_derivatives(p, xi);
            double res[3] = {0, 0, 0};
            double norm = 0.0;
            for (int c = 0; c < d; ++c) {
                res[c] = functional.point[c] - md.x[c];
                norm += res[c] * res[c];
            }
            if (norm < 1e-26) {
                converged = true;
                break;
            }
            const double det = md.jac.det();
            if (std::abs(det) < 1e-14)
                throw GeometryError("evaluate_functional: singular map during inversion");
            double inv[3][3];
            Quadrature2::invert(md.jac, det, inv);
            for (int c = 0; c < d; ++c) {
                double step = 0.0;
                for (int m = 0; m < d; ++m) step += inv[c][m] * res[m];
                xi[c] = std::clamp(xi[c] + step, 0.0, 1.0);
            }
        }
        if (!converged)
            throw std::domain_error("evaluate_functional: point is not inside the domain");
        double value = 0.0;
        std::array<BasisValues, 3> bv;
        const Patch& patch = space.patch();
        for (int k = 0; k < d; ++k) bv[k] = eval_basis(patch.knot_vector(k), xi[k]);
        double w_sum = 0.0;
        std::vector<double> contributions;
        std::array<int, 3> loc{}, gidx{};
        const int L = ctx.local_size;
        for (int l = 0; l < L; ++l) {
            int rem = l;
            for (int k = d - 1; k >= 0; --k) {
                loc[k] = rem % ctx.local_ext[k];
                rem /= ctx.local_ext[k];
            }
            double s = 1.0;
            for (int k = 0; k < d; ++k) {
                s *= bv[k].values[loc[k]];
                gidx[k] = bv[k].first_index + loc[k];
            }
            const std::size_t flat = patch.net_index({gidx.data(), static_cast<std::size_t>(d)});
            const double w = patch.is_nurbs() ? patch.weights()[flat] : 1.0;
            w_sum += w * s;
            value += w * s * net_coefficients[flat];
        }
        return value / w_sum;
    }

    // Domain integral with the assembly quadrature.
    std::vector<int> el_extents(d), gp_extents(d);
    for (int k = 0; k < d; ++k) {
        el_extents[k] = ctx.num_elements(k);
        gp_extents[k] = ctx.tables[k].n_gauss;
    }
    double total = 0.0;
    PointData pt;
    for_each_tuple(el_extents, [&](std::span<const int> el) {
        for_each_tuple(gp_extents, [&](std::span<const int> gp) {
            evaluate_point(ctx, el, gp, false, pt);
            double u = 0.0;
            for (int l = 0; l < ctx.local_size; ++l)
                u += net_coefficients[ctx.global_index(el, l)] * pt.value[l];
            total += u * pt.scale;
        });
    });
    return total;
}

double evaluate_functional(const DiscreteSolution& solution, const Functional& functional) {
    std::vector<double> net(solution.space.num_basis(), 0.0);
    for (std::size_t i = 0; i < net.size(); ++i) {
        const int dof = solution.dof_of_basis[i];
        if (dof >= 0) net[i] = solution.coefficients(dof);
    }
    return evaluate_functional(solution.space, net, functional);
}

double RandomSineField::gamma(const Point& x, std::span<const double> y) const {
    const double rho = std::hypot(x[0], x[1]);
    const double theta = std::atan2(x[1], x[0]);
    const double radial = std::sin(kPi * (rho - r_in) / (r_out - r_in));
    const double ax = axial ? std::sin(kPi * x[2] / height) : 1.0;
    double g = 0.0;
    const std::size_t modes = std::min(y.size(), amplitudes.size());
    for (std::size_t k = 0; k < modes; ++k)
        g += amplitudes[k] * y[k] * std::sin(frequencies[k] * theta) * radial * ax;
    return g;
}

double RandomSineField::operator()(const Point& x, std::span<const double> y) const {
    const double rho = std::hypot(x[0], x[1]);
    const double tol = 1e-9 * r_out;
    if (rho < r_in - tol || rho > r_out + tol)
        throw std::domain_error("random field: point outside the ring");
    return std::exp(c * gamma(x, y));
}

double test1_field(const RandomSineField& field, const Point& x, std::span<const double> y) {
    return field(x, y);
}

Patch unit_square(int degree) {
    std::vector<double> knots;
    knots.insert(knots.end(), degree + 1, 0.0);
    knots.insert(knots.end(), degree + 1, 1.0);
    const KnotVector kv(knots, degree);
    std::vector<Point> cps;
    cps.reserve(static_cast<std::size_t>(degree + 1) * (degree + 1));
    // Greville abscissae reproduce the identity map (linear precision).
    for (int i = 0; i <= degree; ++i)
        for (int j = 0; j <= degree; ++j)
            cps.push_back({static_cast<double>(i) / degree, static_cast<double>(j) / degree, 0.0});
    return Patch(2, {kv, kv}, std::move(cps));
}

DiffusionProblem make_test1_problem_2d(const RandomSineField& field, double grading_exponent) {
    RandomSineField f = field;
    f.axial = false;
    DiffusionProblem problem{
        quarter_annulus(f.r_in, f.r_out),
        [f](const Point& x, std::span<const double> y) { return f(x, y); },
        [](const Point&) { return 1.0; },
        Functional{Functional::Kind::domain_integral, {}},
        static_cast<int>(field.amplitudes.size()),
        grading_exponent,
        {true, true, true, true, true, true}};
    return problem;
}

DiffusionProblem make_test1_problem_3d(const RandomSineField& field, double grading_exponent) {
    RandomSineField f = field;
    f.axial = true;
    DiffusionProblem problem{
        thick_quarter_ring(f.r_in, f.r_out, f.height),
        [f](const Point& x, std::span<const double> y) { return f(x, y); },
        [](const Point&) { return 1.0; },
        Functional{Functional::Kind::domain_integral, {}},
        static_cast<int>(field.amplitudes.size()),
        grading_exponent,
        {true, true, true, true, true, true}};
    return problem;
}

DiffusionProblem manufactured_square(int degree) {
    DiffusionProblem problem{
        unit_square(degree),
        [](const Point&, std::span<const double>) { return 1.0; },
        [](const Point& x) {
            return 2.0 * kPi * kPi * std::sin(kPi * x[0]) * std::sin(kPi * x[1]);
        },
        Functional{Functional::Kind::domain_integral, {}},
        0,
        1.0,
        {true, true, true, true, true, true}};
    return problem;
}

double manufactured_square_exact() { return 4.0 / (kPi * kPi); }

DiffusionProblem manufactured_annulus(double r_in, double r_out) {
    const double aa = r_in * r_in;
    const double bb = r_out * r_out;
    DiffusionProblem problem{
        quarter_annulus(r_in, r_out),
        [](const Point&, std::span<const double>) { return 1.0; },
        [aa, bb](const Point& x) {
            const double rho2 = x[0] * x[0] + x[1] * x[1];
            return x[0] * x[1] * (32.0 * rho2 - 12.0 * (aa + bb));
        },
        Functional{Functional::Kind::domain_integral, {}},
        0,
        1.0,
        {true, true, true, true, true, true}};
    return problem;
}

double manufactured_annulus_exact(double r_in, double r_out) {
    const double a2 = r_in * r_in, b2 = r_out * r_out;
    const double a8 = std::pow(r_in, 8), b8 = std::pow(r_out, 8);
    const double a6 = std::pow(r_in, 6), b6 = std::pow(r_out, 6);
    const double a4 = a2 * a2, b4 = b2 * b2;
    return 0.5 * (-(b8 - a8) / 8.0 + (a2 + b2) * (b6 - a6) / 6.0 - a2 * b2 * (b4 - a4) / 4.0);
}

DiffusionBackend::DiffusionBackend(DiffusionProblem problem) : problem_(std::move(problem)) {}

int DiffusionBackend::spatial_dims() const { return problem_.patch.dim(); }
int DiffusionBackend::stochastic_dims() const { return problem_.stochastic_dim; }

const DiscretizationSpace& DiffusionBackend::space(const MultiIndex& alpha) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = spaces_.find(alpha);
    if (it == spaces_.end()) {
        it = spaces_.emplace(alpha, make_space(problem_.patch, alpha, problem_.grading_exponent))
                 .first;
    }
    return it->second;
}

double DiffusionBackend::solve(const MultiIndex& alpha, std::span<const double> y) const {
    const DiscretizationSpace& sp = space(alpha);
    return evaluate_functional(solve_system(problem_, sp, y), problem_.functional);
}

double DiffusionBackend::solve_cost(const MultiIndex& alpha) const {
    double cost = 1.0;
    for (std::size_t k = 0; k < alpha.size(); ++k)
        cost *= static_cast<double>((1 << alpha[k]) + problem_.patch.knot_vector(k).degree());
    return cost;
}

}  // namespace misciga
