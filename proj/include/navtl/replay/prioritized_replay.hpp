#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "navtl/core/error.hpp"

namespace navtl::replay {

/// Complete binary tree over a power-of-two number of leaves. Internal nodes
/// hold the sum and the max of their children; both are recomputed from the
/// children on every update, never patched by deltas.
class SumTree {
public:
    explicit SumTree(std::size_t capacity) : cap_(capacity), sum_(2 * capacity, 0.0), max_(2 * capacity, 0.0) {
        require(capacity >= 1 && (capacity & (capacity - 1)) == 0, "sum-tree capacity must be a power of two");
    }

    std::size_t capacity() const { return cap_; }
    double total() const { return sum_[1 % sum_.size()]; }
    double max_leaf() const { return max_[1 % max_.size()]; }
    double leaf(std::size_t i) const { return sum_[cap_ + i]; }

    void set(std::size_t i, double p) {
        std::size_t n = cap_ + i;
        sum_[n] = max_[n] = p;
        for (n >>= 1; n >= 1; n >>= 1) {
            sum_[n] = sum_[2 * n] + sum_[2 * n + 1];
            max_[n] = std::max(max_[2 * n], max_[2 * n + 1]);
        }
    }

    /// Leaf whose cumulative range contains `v`. Never lands on a zero-priority
    /// leaf while total() > 0.
    std::size_t find(double v) const {
        if (cap_ == 1) return 0;
        std::size_t n = 1;
        while (n < cap_) {
            const std::size_t l = 2 * n, r = l + 1;
            if (v < sum_[l] || sum_[r] <= 0.0) {
                n = l;
            } else {
                v -= sum_[l];
                n = r;
            }
        }
        return n - cap_;
    }

    /// Largest |node - (left + right)| over internal nodes, recomputed directly.
    double max_internal_error() const {
        double worst = 0.0;
        for (std::size_t n = 1; n < cap_; ++n) worst = std::max(worst, std::fabs(sum_[n] - (sum_[2 * n] + sum_[2 * n + 1])));
        return worst;
    }

private:
    std::size_t cap_;
    std::vector<double> sum_;
    std::vector<double> max_;
};

struct ReplayConfig {
    std::size_t capacity = std::size_t(1) << 15;
    double alpha = 0.6;
    double eps = 0.01;
};

/// Linear beta schedule from `start` to `end` over `steps`.
inline double beta_at(std::uint64_t step, std::uint64_t steps, double start = 0.4, double end = 1.0) {
    if (steps == 0 || step >= steps) return end;
    return start + (end - start) * double(step) / double(steps);
}

template <class T>
struct SampledBatch {
    std::vector<const T*> items;
    std::vector<std::size_t> indices;
    std::vector<float> weights;
};

/// Proportional prioritized replay over transitions of type T.
template <class T>
class PrioritizedReplay {
public:
    explicit PrioritizedReplay(ReplayConfig cfg = {}) : cfg_(cfg), tree_(cfg.capacity) {
        require(cfg.alpha >= 0.0, "PER alpha must be non-negative");
        require(cfg.eps > 0.0, "PER epsilon must be positive");
        items_.reserve(std::min<std::size_t>(cfg.capacity, 4096));
    }

    const ReplayConfig& config() const { return cfg_; }
    std::size_t size() const { return count_; }
    std::size_t capacity() const { return tree_.capacity(); }
    double total_priority() const { return tree_.total(); }
    const SumTree& tree() const { return tree_; }
    const T& at(std::size_t slot) const { return items_.at(slot); }

    /// Stores `t` with the current max priority (1.0 when empty), overwriting the oldest item when full.
    void push(T t) {
        const double p = count_ == 0 ? 1.0 : tree_.max_leaf();
        if (items_.size() < capacity())
            items_.push_back(std::move(t));
        else
            items_[cursor_] = std::move(t);
        tree_.set(cursor_, p);
        cursor_ = (cursor_ + 1) % capacity();
        count_ = std::min(count_ + 1, capacity());
    }

    double priority_for(double td) const { return std::pow(std::fabs(td) + cfg_.eps, cfg_.alpha); }

    /// Stratified proportional draw of n items with importance weights normalized by the batch max.
    template <class Rng>
    SampledBatch<T> sample(std::size_t n, double beta, Rng& rng) const {
        if (n == 0 || count_ < n)
            throw ConfigError("replay holds " + std::to_string(count_) + " transitions, cannot sample " +
                              std::to_string(n));
        SampledBatch<T> b;
        b.items.reserve(n);
        b.indices.reserve(n);
        b.weights.reserve(n);
        const double total = tree_.total();
        const double seg = total / double(n);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> w(n);
        double wmax = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double v = std::min(seg * (double(k) + u(rng)), std::nextafter(total, 0.0));
            const std::size_t idx = tree_.find(v);
            b.indices.push_back(idx);
            b.items.push_back(&items_[idx]);
            const double prob = tree_.leaf(idx) / total;
            w[k] = std::pow(double(count_) * prob, -beta);
            wmax = std::max(wmax, w[k]);
        }
        for (double x : w) b.weights.push_back(float(x / wmax));
        return b;
    }

    void update_priorities(const std::vector<std::size_t>& indices, const std::vector<float>& td_errors) {
        if (indices.size() != td_errors.size()) throw ConfigError("priority update size mismatch");
        for (std::size_t k = 0; k < indices.size(); ++k) {
            if (indices[k] >= count_) throw ConfigError("priority update for an empty replay slot");
            tree_.set(indices[k], priority_for(td_errors[k]));
        }
    }

private:
    ReplayConfig cfg_;
    SumTree tree_;
    std::vector<T> items_;
    std::size_t cursor_ = 0;
    std::size_t count_ = 0;
};

}  // namespace navtl::replay
