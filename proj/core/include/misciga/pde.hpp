#pragma once

#include "misciga/estimator.hpp"
#include "misciga/geometry.hpp"
#include "misciga/multi_index.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <array>
#include <functional>
#include <map>
#include <mutex>
#include <span>

namespace misciga {

/// Diffusion coefficient a(x, y): physical point and stochastic sample.
using Coefficient = std::function<double(const Point&, std::span<const double>)>;
using SourceTerm = std::function<double(const Point&)>;

/// Quantity of interest: either the integral of the solution over the domain
/// or its value at a physical point.
struct Functional {
    enum class Kind { domain_integral, point_value };
    Kind kind = Kind::domain_integral;
    Point point{};
};

/// Scalar elliptic problem -div(a grad u) = f with homogeneous Dirichlet
/// data on the faces flagged in `dirichlet` (face 2k: xi_k = 0, face 2k+1:
/// xi_k = 1). The stochastic sample lives in [-1,1]^N.
struct DiffusionProblem {
    Patch patch;
    Coefficient coefficient;
    SourceTerm rhs;
    Functional functional;
    int stochastic_dim = 0;
    double grading_exponent = 1.0;
    std::array<bool, 6> dirichlet{true, true, true, true, true, true};
};

struct AssembledSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd load;
    /// Net flat index -> constrained-system dof id, or -1 on Dirichlet rows.
    std::vector<int> dof_of_basis;
    int num_dofs = 0;
};

/// Galerkin stiffness and load: per-element Gauss quadrature with degree+1
/// points per direction, pulled back through the patch map, Dirichlet rows
/// eliminated. The matrix is symmetric positive definite.
AssembledSystem assemble(const DiffusionProblem& problem, const DiscretizationSpace& space,
                         std::span<const double> y);

struct DiscreteSolution {
    DiscretizationSpace space;
    /// One coefficient per unconstrained basis function.
    Eigen::VectorXd coefficients;
    std::vector<int> dof_of_basis;
};

/// Assembles and solves by sparse LDLT factorization. Deterministic:
/// identical inputs produce bit-identical coefficients.
DiscreteSolution solve_system(const DiffusionProblem& problem, const DiscretizationSpace& space,
                              std::span<const double> y);

/// phi_alpha(y): builds the level-alpha space, solves, applies the functional.
double solve_sample(const DiffusionProblem& problem, std::span<const int> alpha,
                    std::span<const double> y);

double evaluate_functional(const DiscreteSolution& solution, const Functional& functional);

/// Low-level variant taking one coefficient per basis function (boundary
/// functions included), used for interpolation-style checks.
double evaluate_functional(const DiscretizationSpace& space,
                           std::span<const double> net_coefficients,
                           const Functional& functional);

/// Random diffusion field in cylindrical coordinates: a = exp(c * gamma)
/// with gamma a sum of sine modes scaled by the sample components,
/// gamma = sum_k amp_k y_k sin(freq_k theta) sin(pi (rho - r_in)/(r_out - r_in))
/// times sin(pi z / height) when axial is set.
struct RandomSineField {
    double c = 4.0;
    std::vector<double> amplitudes{1.0, 0.4, 0.1};
    std::vector<double> frequencies{2.0, 8.0, 16.0};
    double r_in = 1.0;
    double r_out = 2.0;
    double height = 1.0;
    bool axial = false;

    double gamma(const Point& x, std::span<const double> y) const;
    double operator()(const Point& x, std::span<const double> y) const;
};

/// Field evaluation with ring-bounds checking (throws std::domain_error for
/// points outside the annulus).
double test1_field(const RandomSineField& field, const Point& x, std::span<const double> y);

/// Identity-mapped unit square patch of the given degree.
Patch unit_square(int degree);

/// Ready-made problems.
/// Test-1 analogue on the 2D quarter annulus (field modes as configured).
DiffusionProblem make_test1_problem_2d(const RandomSineField& field, double grading_exponent);
/// 3D variant on the thick quarter ring.
DiffusionProblem make_test1_problem_3d(const RandomSineField& field, double grading_exponent);

/// Manufactured solution u = sin(pi x) sin(pi y) on the unit square, a = 1;
/// the exact functional value is 4/pi^2.
DiffusionProblem manufactured_square(int degree);
double manufactured_square_exact();

/// Manufactured solution u = x y (rho^2 - r_in^2)(r_out^2 - rho^2) on the
/// quarter annulus, a = 1, with a closed-form exact functional value.
DiffusionProblem manufactured_annulus(double r_in, double r_out);
double manufactured_annulus_exact(double r_in, double r_out);

/// Full-tensor backend evaluating phi_alpha(y) with the IGA solver; spaces
/// are cached per alpha. Cost model: total basis functions of the space.
class DiffusionBackend : public TensorBackend {
public:
    explicit DiffusionBackend(DiffusionProblem problem);

    int spatial_dims() const override;
    int stochastic_dims() const override;
    double solve(const MultiIndex& alpha, std::span<const double> y) const override;
    double solve_cost(const MultiIndex& alpha) const override;

    const DiffusionProblem& problem() const { return problem_; }
    const DiscretizationSpace& space(const MultiIndex& alpha) const;

private:
    DiffusionProblem problem_;
    mutable std::map<MultiIndex, DiscretizationSpace> spaces_;
    mutable std::mutex mutex_;
};

}  // namespace misciga
