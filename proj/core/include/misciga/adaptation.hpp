#pragma once

#include "misciga/estimator.hpp"
#include "misciga/multi_index.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace misciga {

/// Convergence/cost/decay rates driving the a-priori error and work models:
/// r_i and c_i are the spatial convergence and cost-growth rates per
/// parametric direction, g_j the stochastic decay rates.
struct RateModel {
    std::vector<double> r;
    std::vector<double> c;
    std::vector<double> g;

    int spatial_dims() const { return static_cast<int>(r.size()); }
    int stochastic_dims() const { return static_cast<int>(g.size()); }
    void validate() const;  ///< throws std::invalid_argument on non-positive rates
};

/// Error model 2^(-sum alpha_i r_i - sum g_j 2^(beta_j) log2 e).
double e_tilde(const RateModel& model, std::span<const int> alpha, std::span<const int> beta);
double log2_e_tilde(const RateModel& model, std::span<const int> alpha,
                    std::span<const int> beta);

/// Work model 2^(sum alpha_i c_i + sum beta_j).
double w_tilde(const RateModel& model, std::span<const int> alpha, std::span<const int> beta);
double log2_w_tilde(const RateModel& model, std::span<const int> alpha,
                    std::span<const int> beta);

/// Observed error contribution of one index: |mixed detail| around (alpha, beta).
double error_contribution(const TensorBackend& backend, const MultiIndex& alpha,
                          const MultiIndex& beta, EstimatorCache& cache);

/// Weighted total-degree set { i >= 1 : sum kappa_k alpha_k + sum g_j beta_j <= w }.
IndexSet build_total_degree(std::span<const double> kappa, std::span<const double> g, int w);

/// A-priori quasi-optimal set
/// { i >= 1 : sum (r_k+c_k) alpha_k + sum (beta_j + g_j 2^(beta_j) log2 e) <= w }.
IndexSet build_optimal_set(const RateModel& model, int w);

/// Per-index bookkeeping over Lambda and its margin.
struct ProfitRecord {
    std::optional<double> error_observed;  ///< |mixed detail|, members of Lambda
    std::optional<double> error_model;     ///< scaled E-tilde
    std::optional<double> work_model;      ///< W-tilde
    std::optional<double> profit;          ///< error_model / work_model
};

struct ProfitLedger {
    std::map<MultiIndex, ProfitRecord> records;
};

/// One spatial level sweep evaluation: functional value and measured cost.
using LevelSolver =
    std::function<std::pair<double, double>(const MultiIndex& alpha)>;

struct SpatialFitOptions {
    int base_level = 1;
    int num_levels = 5;  ///< levels per direction including the reference
};

struct SpatialFitResult {
    std::vector<double> r;
    std::vector<double> c;
    std::vector<double> r_residual;  ///< max abs regression residual (log2 scale)
    std::vector<double> c_residual;
    std::vector<std::string> warnings;  ///< non-monotone error sequences etc.
};

/// Least-squares fit of r (error decay vs level, finest level as reference)
/// and c (cost growth vs level), one direction swept at a time.
SpatialFitResult fit_spatial_rates(const LevelSolver& solver, int spatial_dims,
                                   const SpatialFitOptions& options);

/// Convenience wrapper: sweeps a backend at the stochastic midpoint y = 0
/// with cost taken from the backend's cost model.
SpatialFitResult fit_spatial_rates(const TensorBackend& backend,
                                   const SpatialFitOptions& options);

struct GFitResult {
    std::vector<double> g;
    double log2_scale = 0.0;  ///< fitted intercept (log2 of the error-model prefactor)
    bool floored = false;     ///< some g hit the lower bound
    bool insufficient = false;  ///< some direction lacked beta variation; prior kept
};

/// Fits g (and an intercept) to observed error contributions over Lambda with
/// r held fixed; directions without at least two distinct beta values keep
/// their prior value. Results are clamped from below at g_min.
GFitResult fit_g_rates(const std::map<MultiIndex, double>& observed_error, int spatial_dims,
                       int stochastic_dims, const RateModel& model, double g_min);

enum class MiscStatus { converged, budget_exhausted, iteration_limit };

struct MiscOptions {
    RateModel model;  ///< r, c fixed; g taken as the initial guess
    double tolerance = 1e-3;
    int w0 = 0;  ///< initial total-degree level; 0 = minimal (root only)
    long max_solves = std::numeric_limits<long>::max();
    int max_iterations = 10000;
    double g_min = 0.05;
    bool refit_g = true;
};

struct IterationRecord {
    int iteration = 0;
    std::size_t lambda_size = 0;
    double estimate = 0.0;
    double margin_model_error = 0.0;          ///< sum of scaled E-tilde over Mar
    double reduced_margin_model_error = 0.0;  ///< same over Red
    double cumulative_work = 0.0;             ///< realized, from the cache
    long cumulative_solves = 0;
    std::vector<double> g;
    std::vector<MultiIndex> added;  ///< indices adopted at the start of this iteration
};

struct MiscResult {
    double estimate = 0.0;
    IndexSet lambda;
    ProfitLedger ledger;
    std::vector<IterationRecord> history;
    RateModel model;          ///< final rates (g possibly refitted)
    double log2_scale = 0.0;  ///< final error-model prefactor
    MiscStatus status = MiscStatus::converged;
};

/// Profit-driven adaptive loop: start from the total-degree set at w0, refit
/// g from observed details over Lambda each iteration, expand by the full
/// argmax-profit subset of the reduced margin (ties included), stop when the
/// modeled margin error drops below the tolerance or the budget runs out.
MiscResult run_misc(const TensorBackend& backend, EstimatorCache& cache,
                    const MiscOptions& options);

}  // namespace misciga
