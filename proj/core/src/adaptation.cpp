#include "misciga/adaptation.hpp"

#include "misciga/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace misciga {

namespace {

constexpr double kLog2E = std::numbers::log2e;

struct LineFit {
    double intercept = 0.0;
    double slope = 0.0;
    double max_residual = 0.0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit fit;
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (std::size_t i = 0; i < n; ++i)
        fit.max_residual =
            std::max(fit.max_residual, std::abs(y[i] - fit.intercept - fit.slope * x[i]));
    return fit;
}

}  // namespace

void RateModel::validate() const {
    for (double v : r)
        if (!(v > 0.0)) throw std::invalid_argument("rate model: r must be positive");
    for (double v : c)
        if (!(v > 0.0)) throw std::invalid_argument("rate model: c must be positive");
    for (double v : g)
        if (!(v > 0.0)) throw std::invalid_argument("rate model: g must be positive");
}

double log2_e_tilde(const RateModel& model, std::span<const int> alpha,
                    std::span<const int> beta) {
    double exponent = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) exponent -= alpha[i] * model.r[i];
    for (std::size_t j = 0; j < beta.size(); ++j)
        exponent -= model.g[j] * std::exp2(beta[j]) * kLog2E;
    return exponent;
}

double e_tilde(const RateModel& model, std::span<const int> alpha, std::span<const int> beta) {
    return std::exp2(log2_e_tilde(model, alpha, beta));
}

double log2_w_tilde(const RateModel& model, std::span<const int> alpha,
                    std::span<const int> beta) {
    double exponent = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) exponent += alpha[i] * model.c[i];
    for (std::size_t j = 0; j < beta.size(); ++j) exponent += beta[j];
    return exponent;
}

double w_tilde(const RateModel& model, std::span<const int> alpha, std::span<const int> beta) {
    return std::exp2(log2_w_tilde(model, alpha, beta));
}

double error_contribution(const TensorBackend& backend, const MultiIndex& alpha,
                          const MultiIndex& beta, EstimatorCache& cache) {
    return std::abs(delta_mix(backend, alpha, beta, cache));
}

namespace {

/// Enumerates { i >= 1 : sum_k weight_k(i_k) <= budget } for per-component
/// monotone weight functions, by depth-first search.
void enumerate_level_set(const std::vector<std::function<double(int)>>& weight, double budget,
                         MultiIndex& current, int k, double partial, double min_tail,
                         std::set<MultiIndex>& out) {
    const int dims = static_cast<int>(weight.size());
    if (k == dims) {
        out.insert(current);
        return;
    }
    // min_tail is the cost of setting components k+1..dims-1 to one.
    const double tail = min_tail - weight[k](1);
    for (int v = 1;; ++v) {
        const double with_v = partial + weight[k](v);
        if (with_v + tail > budget) break;
        current[k] = v;
        enumerate_level_set(weight, budget, current, k + 1, with_v, tail, out);
    }
    current[k] = 1;
}

IndexSet enumerate_set(const std::vector<std::function<double(int)>>& weight, double budget) {
    double min_total = 0.0;
    for (const auto& w : weight) min_total += w(1);
    std::set<MultiIndex> members;
    if (min_total <= budget && !weight.empty()) {
        MultiIndex current(weight.size(), 1);
        enumerate_level_set(weight, budget, current, 0, 0.0, min_total, members);
    }
    return IndexSet(std::move(members));
}

}  // namespace

IndexSet build_total_degree(std::span<const double> kappa, std::span<const double> g, int w) {
    std::vector<std::function<double(int)>> weight;
    for (double k : kappa) {
        if (!(k > 0.0)) throw std::invalid_argument("build_total_degree: weights must be positive");
        weight.emplace_back([k](int v) { return k * v; });
    }
    for (double gj : g) {
        if (!(gj > 0.0)) throw std::invalid_argument("build_total_degree: weights must be positive");
        weight.emplace_back([gj](int v) { return gj * v; });
    }
    return enumerate_set(weight, w);
}

IndexSet build_optimal_set(const RateModel& model, int w) {
    model.validate();
    std::vector<std::function<double(int)>> weight;
    for (std::size_t i = 0; i < model.r.size(); ++i) {
        const double rc = model.r[i] + model.c[i];
        weight.emplace_back([rc](int v) { return rc * v; });
    }
    for (double gj : model.g) {
        weight.emplace_back([gj](int v) { return v + gj * std::exp2(v) * kLog2E; });
    }
    return enumerate_set(weight, w);
}

SpatialFitResult fit_spatial_rates(const LevelSolver& solver, int spatial_dims,
                                   const SpatialFitOptions& options) {
    if (options.num_levels < 4)
        throw std::invalid_argument("fit_spatial_rates: need at least 4 levels per direction");
    SpatialFitResult result;
    result.r.resize(spatial_dims);
    result.c.resize(spatial_dims);
    result.r_residual.resize(spatial_dims);
    result.c_residual.resize(spatial_dims);

    for (int dir = 0; dir < spatial_dims; ++dir) {
        std::vector<double> values, costs, levels;
        for (int l = 0; l < options.num_levels; ++l) {
            MultiIndex alpha(spatial_dims, options.base_level);
            alpha[dir] = options.base_level + l;
            const auto [value, cost] = solver(alpha);
            values.push_back(value);
            costs.push_back(cost);
            levels.push_back(alpha[dir]);
        }

        // Finest level of the sweep is the reference; errors come from the
        // remaining levels.
        const double reference = values.back();
        std::vector<double> xs, ys;
        bool monotone = true;
        double prev = std::numeric_limits<double>::infinity();
        for (int l = 0; l + 1 < options.num_levels; ++l) {
            const double err = std::abs(values[l] - reference);
            if (err <= 0.0) {
                result.warnings.push_back("direction " + std::to_string(dir) +
                                          ": zero error at level " +
                                          std::to_string(static_cast<int>(levels[l])));
                continue;
            }
            if (err >= prev) monotone = false;
            prev = err;
            xs.push_back(levels[l]);
            ys.push_back(std::log2(err));
        }
        if (!monotone)
            result.warnings.push_back("direction " + std::to_string(dir) +
                                      ": non-monotone error sequence");
        if (xs.size() < 2)
            throw std::invalid_argument("fit_spatial_rates: not enough usable error levels");
        const LineFit rfit = fit_line(xs, ys);
        result.r[dir] = -rfit.slope;
        result.r_residual[dir] = rfit.max_residual;

        std::vector<double> cy;
        for (double cost : costs) cy.push_back(std::log2(cost));
        const LineFit cfit = fit_line(levels, cy);
        result.c[dir] = cfit.slope;
        result.c_residual[dir] = cfit.max_residual;
    }
    return result;
}

SpatialFitResult fit_spatial_rates(const TensorBackend& backend,
                                   const SpatialFitOptions& options) {
    const std::vector<double> midpoint(backend.stochastic_dims(), 0.0);
    LevelSolver solver = [&](const MultiIndex& alpha) {
        return std::pair<double, double>(backend.solve(alpha, midpoint),
                                         backend.solve_cost(alpha));
    };
    return fit_spatial_rates(solver, backend.spatial_dims(), options);
}

GFitResult fit_g_rates(const std::map<MultiIndex, double>& observed_error, int spatial_dims,
                       int stochastic_dims, const RateModel& model, double g_min) {
    GFitResult result;
    result.g = model.g;

    // Usable data: strictly positive error contributions.
    std::vector<const MultiIndex*> keys;
    for (const auto& [key, e] : observed_error) {
        if (e > 0.0 && std::isfinite(e)) keys.push_back(&key);
    }

    // A direction is identifiable only with two distinct beta values.
    std::vector<bool> fit_dir(stochastic_dims, false);
    for (int j = 0; j < stochastic_dims; ++j) {
        std::set<int> seen;
        for (const auto* key : keys) seen.insert((*key)[spatial_dims + j]);
        fit_dir[j] = seen.size() >= 2;
        if (!fit_dir[j]) result.insufficient = true;
    }

    std::vector<int> columns;
    for (int j = 0; j < stochastic_dims; ++j)
        if (fit_dir[j]) columns.push_back(j);

    if (keys.size() < columns.size() + 1 || columns.empty()) {
        result.insufficient = true;
        return result;
    }

    // log2 E + sum alpha r = theta0 - log2(e) * sum_j g_j 2^(beta_j), solved
    // in least squares for (theta0, g_fitted); unidentifiable directions keep
    // the prior g and contribute to the known part.
    const std::size_t rows = keys.size();
    Eigen::MatrixXd a(rows, columns.size() + 1);
    Eigen::VectorXd rhs(rows);
    for (std::size_t t = 0; t < rows; ++t) {
        const MultiIndex& key = *keys[t];
        double z = std::log2(observed_error.at(key));
        for (int i = 0; i < spatial_dims; ++i) z += key[i] * model.r[i];
        for (int j = 0; j < stochastic_dims; ++j)
            if (!fit_dir[j]) z += kLog2E * model.g[j] * std::exp2(key[spatial_dims + j]);
        rhs(t) = z;
        a(t, 0) = 1.0;
        for (std::size_t cidx = 0; cidx < columns.size(); ++cidx)
            a(t, cidx + 1) = -kLog2E * std::exp2(key[spatial_dims + columns[cidx]]);
    }
    const Eigen::VectorXd theta = a.colPivHouseholderQr().solve(rhs);
    result.log2_scale = theta(0);
    for (std::size_t cidx = 0; cidx < columns.size(); ++cidx) {
        double gj = theta(cidx + 1);
        if (gj < g_min) {
            gj = g_min;
            result.floored = true;
        }
        result.g[columns[cidx]] = gj;
    }
    return result;
}

MiscResult run_misc(const TensorBackend& backend, EstimatorCache& cache,
                    const MiscOptions& options) {
    const int d = backend.spatial_dims();
    const int n = backend.stochastic_dims();
    const int dims = d + n;
    if (options.model.spatial_dims() != d || options.model.stochastic_dims() != n)
        throw std::invalid_argument("run_misc: rate model dimensions do not match the backend");
    options.model.validate();
    if (!(options.tolerance > 0.0))
        throw std::invalid_argument("run_misc: tolerance must be positive");

    MiscResult result;
    result.model = options.model;

    const int w0 = std::max(options.w0, dims);
    const std::vector<double> unit(dims, 1.0);
    result.lambda = build_total_degree(std::span(unit).first(d), std::span(unit).last(n), w0);

    std::map<MultiIndex, double> observed;
    std::vector<MultiIndex> added;
    int iteration = 0;

    for (;;) {
        result.estimate = misc_estimate(backend, result.lambda, cache);
        for (const auto& member : result.lambda) {
            if (!observed.count(member)) {
                observed[member] =
                    error_contribution(backend, head(member, d), tail(member, n), cache);
            }
        }
        if (options.refit_g && n > 0) {
            const GFitResult gfit =
                fit_g_rates(observed, d, n, result.model, options.g_min);
            result.model.g = gfit.g;
            result.log2_scale = gfit.log2_scale;
        }
        // Calibrate the error-model prefactor as an empirical envelope: the
        // largest observed detail-to-model ratio. On model-exact data this
        // coincides with the fitted intercept; in pre-asymptotic regimes it
        // keeps the margin sum from underestimating the remaining error.
        {
            double theta = -std::numeric_limits<double>::infinity();
            for (const auto& member : result.lambda) {
                const double e = observed[member];
                if (!(e > 0.0)) continue;
                theta = std::max(theta, std::log2(e) - log2_e_tilde(result.model, head(member, d),
                                                                    tail(member, n)));
            }
            if (std::isfinite(theta)) result.log2_scale = theta;
        }

        const auto mar = margin(result.lambda);
        const auto red = reduced_margin(result.lambda);
        const double scale = std::exp2(result.log2_scale);

        result.ledger.records.clear();
        for (const auto& member : result.lambda) {
            ProfitRecord& rec = result.ledger.records[member];
            rec.error_observed = observed[member];
        }
        double margin_sum = 0.0;
        double reduced_sum = 0.0;
        for (const auto& idx : mar) {
            const auto alpha = head(idx, d);
            const auto beta = tail(idx, n);
            ProfitRecord& rec = result.ledger.records[idx];
            const double em = scale * e_tilde(result.model, alpha, beta);
            const double wm = w_tilde(result.model, alpha, beta);
            rec.error_model = em;
            rec.work_model = wm;
            rec.profit = em / wm;
            margin_sum += em;
            if (red.count(idx)) reduced_sum += em;
        }

        IterationRecord record;
        record.iteration = iteration;
        record.lambda_size = result.lambda.size();
        record.estimate = result.estimate;
        record.margin_model_error = margin_sum;
        record.reduced_margin_model_error = reduced_sum;
        record.cumulative_work = cache.total_work();
        record.cumulative_solves = cache.total_solves();
        record.g = result.model.g;
        record.added = added;
        result.history.push_back(std::move(record));

        if (margin_sum <= options.tolerance) {
            result.status = MiscStatus::converged;
            break;
        }
        if (cache.total_solves() >= options.max_solves) {
            result.status = MiscStatus::budget_exhausted;
            break;
        }
        if (iteration >= options.max_iterations) {
            result.status = MiscStatus::iteration_limit;
            break;
        }

        // Theta: all profit-maximizing members of the reduced margin.
        double best = -std::numeric_limits<double>::infinity();
        std::map<MultiIndex, double> log_profit;
        for (const auto& idx : red) {
            const double lp = result.log2_scale +
                              log2_e_tilde(result.model, head(idx, d), tail(idx, n)) -
                              log2_w_tilde(result.model, head(idx, d), tail(idx, n));
            log_profit[idx] = lp;
            best = std::max(best, lp);
        }
        const double tie_tol = 1e-9 * std::max(1.0, std::abs(best));
        added.clear();
        for (const auto& [idx, lp] : log_profit) {
            if (best - lp <= tie_tol) {
                result.lambda.insert(idx);
                added.push_back(idx);
            }
        }
        ++iteration;
    }
    return result;
}

}  // namespace misciga
