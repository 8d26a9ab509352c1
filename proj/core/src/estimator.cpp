#include "misciga/estimator.hpp"

#include "misciga/errors.hpp"
#include "misciga/quadrature.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace misciga {

MultiIndex concat(const MultiIndex& alpha, const MultiIndex& beta) {
    MultiIndex out;
    out.reserve(alpha.size() + beta.size());
    out.insert(out.end(), alpha.begin(), alpha.end());
    out.insert(out.end(), beta.begin(), beta.end());
    return out;
}

MultiIndex head(const MultiIndex& i, int count) {
    return MultiIndex(i.begin(), i.begin() + count);
}

MultiIndex tail(const MultiIndex& i, int count) {
    return MultiIndex(i.end() - count, i.end());
}

EstimatorCache::Entry EstimatorCache::get_or_compute(const MultiIndex& alpha,
                                                     const MultiIndex& beta,
                                                     const std::function<Entry()>& compute) {
    const Key key{alpha, beta};
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
        auto it = entries_.find(key);
        if (it != entries_.end()) return it->second;
        if (!pending_.count(key)) {
            pending_.insert(key);
            break;
        }
        cv_.wait(lock);
    }
    lock.unlock();
    Entry entry;
    try {
        entry = compute();
    } catch (...) {
        lock.lock();
        pending_.erase(key);
        cv_.notify_all();
        throw;
    }
    lock.lock();
    entries_.emplace(key, entry);
    pending_.erase(key);
    cv_.notify_all();
    return entry;
}

bool EstimatorCache::contains(const MultiIndex& alpha, const MultiIndex& beta) const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.count({alpha, beta}) > 0;
}

std::optional<EstimatorCache::Entry> EstimatorCache::find(const MultiIndex& alpha,
                                                          const MultiIndex& beta) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = entries_.find({alpha, beta});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

double EstimatorCache::solve_or_compute(const MultiIndex& alpha, std::span<const double> y,
                                        const std::function<double()>& compute,
                                        bool* was_new) {
    const SolveKey key{alpha, std::vector<double>(y.begin(), y.end())};
    std::unique_lock<std::mutex> lock(mutex_);
    for (;;) {
        auto it = solves_.find(key);
        if (it != solves_.end()) {
            if (was_new) *was_new = false;
            return it->second;
        }
        if (!pending_solves_.count(key)) {
            pending_solves_.insert(key);
            break;
        }
        cv_.wait(lock);
    }
    lock.unlock();
    double value = 0.0;
    try {
        value = compute();
    } catch (...) {
        lock.lock();
        pending_solves_.erase(key);
        cv_.notify_all();
        throw;
    }
    lock.lock();
    solves_.emplace(key, value);
    ++solve_count_[alpha];
    pending_solves_.erase(key);
    cv_.notify_all();
    if (was_new) *was_new = true;
    return value;
}

double EstimatorCache::total_work() const {
    std::lock_guard<std::mutex> lock(mutex_);
    double w = 0.0;
    for (const auto& [key, entry] : entries_) w += entry.work;
    return w;
}

long EstimatorCache::total_solves() const {
    std::lock_guard<std::mutex> lock(mutex_);
    long n = 0;
    for (const auto& [alpha, count] : solve_count_) n += count;
    return n;
}

std::size_t EstimatorCache::num_entries() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_.size();
}

std::map<MultiIndex, long> EstimatorCache::solves_per_alpha() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return solve_count_;
}

std::map<MultiIndex, int> combination_coefficients(const IndexSet& lambda) {
    std::map<MultiIndex, int> coeff;
    if (lambda.empty()) return coeff;
    const int k = lambda.dim();
    for (const auto& member : lambda) {
        int c = 0;
        for (unsigned mask = 0; mask < (1u << k); ++mask) {
            MultiIndex neighbor = member;
            int bits = 0;
            for (int j = 0; j < k; ++j) {
                if (mask & (1u << j)) {
                    ++neighbor[j];
                    ++bits;
                }
            }
            if (lambda.contains(neighbor)) c += (bits % 2 == 0) ? 1 : -1;
        }
        if (c != 0) coeff.emplace(member, c);
    }
    return coeff;
}

double full_tensor_value(const TensorBackend& backend, const MultiIndex& alpha,
                         const MultiIndex& beta, EstimatorCache& cache) {
    for (int a : alpha)
        if (a == 0) return 0.0;
    for (int b : beta)
        if (b == 0) return 0.0;

    const auto entry = cache.get_or_compute(alpha, beta, [&]() {
        const auto start = std::chrono::steady_clock::now();
        const TensorRule rule = tensor_rule(beta);
        double sum = 0.0;
        long new_solves = 0;
        for (std::size_t j = 0; j < rule.size(); ++j) {
            bool was_new = false;
            const auto y = rule.point(j);
            const double v = cache.solve_or_compute(
                alpha, y, [&]() { return backend.solve(alpha, y); }, &was_new);
            if (!std::isfinite(v)) {
                std::ostringstream msg;
                msg << "full_tensor_value: non-finite solve at alpha=" << to_string(alpha)
                    << " beta=" << to_string(beta) << " node " << j;
                throw EvaluationError(msg.str());
            }
            if (was_new) ++new_solves;
            sum += v * rule.weights[j];
        }
        EstimatorCache::Entry entry;
        entry.value = sum;
        entry.new_solves = new_solves;
        entry.work = static_cast<double>(new_solves) * backend.solve_cost(alpha);
        entry.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return entry;
    });
    return entry.value;
}

double delta_mix(const TensorBackend& backend, const MultiIndex& alpha,
                 const MultiIndex& beta, EstimatorCache& cache) {
    const int d = static_cast<int>(alpha.size());
    const int k = d + static_cast<int>(beta.size());
    const MultiIndex combined = concat(alpha, beta);
    double sum = 0.0;
    for (unsigned mask = 0; mask < (1u << k); ++mask) {
        MultiIndex lower = combined;
        int bits = 0;
        bool vanishes = false;
        for (int j = 0; j < k; ++j) {
            if (mask & (1u << j)) {
                if (--lower[j] == 0) vanishes = true;
                ++bits;
            }
        }
        if (vanishes) continue;
        const double sign = (bits % 2 == 0) ? 1.0 : -1.0;
        sum += sign * full_tensor_value(backend, head(lower, d),
                                        tail(lower, k - d), cache);
    }
    return sum;
}

double misc_estimate(const TensorBackend& backend, const IndexSet& lambda,
                     EstimatorCache& cache) {
    const int d = backend.spatial_dims();
    double sum = 0.0;
    for (const auto& [member, c] : combination_coefficients(lambda)) {
        const int n = static_cast<int>(member.size()) - d;
        sum += c * full_tensor_value(backend, head(member, d), tail(member, n), cache);
    }
    return sum;
}

}  // namespace misciga
