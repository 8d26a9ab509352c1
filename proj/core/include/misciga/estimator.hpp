#pragma once

#include "misciga/multi_index.hpp"

#include <condition_variable>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <utility>

namespace misciga {

/// Splitting helpers for combined indices [alpha | beta].
MultiIndex concat(const MultiIndex& alpha, const MultiIndex& beta);
MultiIndex head(const MultiIndex& i, int count);
MultiIndex tail(const MultiIndex& i, int count);

/// Anything that can produce phi_alpha(y) plus a per-solve cost model.
/// Implementations must be pure in (alpha, y) and safe for concurrent calls.
class TensorBackend {
public:
    virtual ~TensorBackend() = default;
    virtual int spatial_dims() const = 0;
    virtual int stochastic_dims() const = 0;
    virtual double solve(const MultiIndex& alpha, std::span<const double> y) const = 0;
    /// Degrees-of-freedom-based cost of one solve at this level.
    virtual double solve_cost(const MultiIndex& alpha) const = 0;
};

/// Memoized full-tensor values M_{alpha,beta} plus the underlying per-sample
/// solves. Entries are write-once; concurrent requests for the same key block
/// until the single computation finishes (compute-once semantics). Solves are
/// shared across quadrature levels through bit-exact nested nodes, and the
/// work charged to an entry counts only the solves it triggered first.
class EstimatorCache {
public:
    struct Entry {
        double value = 0.0;
        double work = 0.0;  ///< new solves times the per-solve cost model
        double wall_seconds = 0.0;
        long new_solves = 0;
    };

    Entry get_or_compute(const MultiIndex& alpha, const MultiIndex& beta,
                         const std::function<Entry()>& compute);
    bool contains(const MultiIndex& alpha, const MultiIndex& beta) const;
    std::optional<Entry> find(const MultiIndex& alpha, const MultiIndex& beta) const;

    double solve_or_compute(const MultiIndex& alpha, std::span<const double> y,
                            const std::function<double()>& compute, bool* was_new);

    double total_work() const;
    long total_solves() const;
    std::size_t num_entries() const;
    /// Realized PDE solves grouped by spatial level.
    std::map<MultiIndex, long> solves_per_alpha() const;

private:
    using Key = std::pair<MultiIndex, MultiIndex>;
    using SolveKey = std::pair<MultiIndex, std::vector<double>>;

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::map<Key, Entry> entries_;
    std::set<Key> pending_;
    std::map<SolveKey, double> solves_;
    std::set<SolveKey> pending_solves_;
    std::map<MultiIndex, long> solve_count_;
};

/// Combination-technique coefficients of a downward-closed set: for each
/// member, the signed count of binary forward neighbors inside the set.
/// Members with coefficient zero are omitted.
std::map<MultiIndex, int> combination_coefficients(const IndexSet& lambda);

/// M_{alpha,beta}: tensor quadrature of y -> solve(alpha, y) at levels beta,
/// memoized. Zero if any component of alpha or beta is zero.
double full_tensor_value(const TensorBackend& backend, const MultiIndex& alpha,
                         const MultiIndex& beta, EstimatorCache& cache);

/// First-order mixed difference of M around (alpha, beta).
double delta_mix(const TensorBackend& backend, const MultiIndex& alpha,
                 const MultiIndex& beta, EstimatorCache& cache);

/// Combination-technique estimator over a downward-closed set.
double misc_estimate(const TensorBackend& backend, const IndexSet& lambda,
                     EstimatorCache& cache);

}  // namespace misciga
