#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "seqpolicy/errors.hpp"

namespace seqpolicy {

/// Q-values keyed by (discretized history, action). Unvisited entries read as 0.
class QTable {
  public:
    using Key = std::pair<std::int64_t, std::size_t>;

    double value(std::int64_t history, std::size_t action) const {
        auto it = values_.find({history, action});
        return it == values_.end() ? 0.0 : it->second;
    }

    std::size_t visits(std::int64_t history, std::size_t action) const {
        auto it = visits_.find({history, action});
        return it == visits_.end() ? 0 : it->second;
    }

    /// max over `arms`; 0 for an empty (terminal) set.
    double max_value(std::int64_t history, const std::vector<std::size_t>& arms) const {
        if (arms.empty()) return 0.0;
        double best = value(history, arms.front());
        for (std::size_t a : arms) best = std::max(best, value(history, a));
        return best;
    }

    void set(std::int64_t history, std::size_t action, double v) {
        if (!std::isfinite(v)) throw ParameterError("Q-value must be finite");
        values_[{history, action}] = v;
    }

    void record_visit(std::int64_t history, std::size_t action) { ++visits_[{history, action}]; }

    /// Total number of updates applied.
    std::size_t updates() const noexcept { return updates_; }
    void count_update() noexcept { ++updates_; }

    const std::map<Key, double>& entries() const noexcept { return values_; }

    friend bool operator==(const QTable&, const QTable&) = default;

  private:
    std::map<Key, double> values_;
    std::map<Key, std::size_t> visits_;
    std::size_t updates_ = 0;
};

/// (h_t, a_t, y, h_{t+1}) with the arms available at h_{t+1}; empty when terminal.
struct QTransition {
    std::int64_t history = 0;
    std::size_t action = 0;
    double reward = 0.0;
    std::int64_t next_history = 0;
    std::vector<std::size_t> next_arms;
};

/// In-place Q(h,a) += α[y + γ max_a' Q(h',a') - Q(h,a)].
inline void tabular_q_update_inplace(QTable& q, const QTransition& tr, double alpha, double gamma) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0,1]");
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0,1]");
    const double old = q.value(tr.history, tr.action);
    const double target = tr.reward + gamma * q.max_value(tr.next_history, tr.next_arms);
    q.record_visit(tr.history, tr.action);
    q.set(tr.history, tr.action, old + alpha * (target - old));
    q.count_update();
}

inline QTable tabular_q_update(QTable q, const QTransition& tr, double alpha, double gamma) {
    tabular_q_update_inplace(q, tr, alpha, gamma);
    return q;
}

/// Repeated passes over a fixed batch of transitions with step size
/// α = 1/(visits of (h,a) including this one).
inline QTable tabular_q_learn(const std::vector<QTransition>& batch, std::size_t sweeps, double gamma,
                              QTable q = {}) {
    for (std::size_t s = 0; s < sweeps; ++s)
        for (const auto& tr : batch) {
            const double alpha = 1.0 / static_cast<double>(q.visits(tr.history, tr.action) + 1);
            tabular_q_update_inplace(q, tr, alpha, gamma);
        }
    return q;
}

}  // namespace seqpolicy
