#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/features.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

// Stage rules. Deterministic rules emit a single arm; stochastic rules emit a
// probability vector.

/// Context-free randomization (uniform, fixed allocation ratios).
struct FixedProbsRule {
    Vector probs;
};

/// Soft-max class: π(a_k | x) = exp(-φ(x)ᵀψ_k) / Σ_j exp(-φ(x)ᵀψ_j).
struct SoftmaxRule {
    FeatureMap features;
    std::vector<Vector> psi;  // one coefficient block per arm
};

/// Binary logistic class: π(1 | x) = 1 / (1 + exp(-g(x)ᵀθ)).
struct LogisticRule {
    FeatureMap features;
    Vector theta;
};

/// Greedy rule argmax_a φ(x,a)ᵀθ, lowest arm on ties.
struct LinearArgmaxRule {
    ArmFeatureMap features;
    Vector theta;
};

/// Binary sign rule: arm 1 (coded +1) when φ(x)ᵀcoef > 0, else arm 0 (coded
/// -1). sign(0) = -1.
struct SignRule {
    FeatureMap features;
    Vector coef;
};

/// Lookup rule keyed by the rounded state vector.
struct TabularRule {
    std::size_t input_dim = 0;
    std::size_t arity = 2;
    std::map<std::vector<long long>, std::size_t> table;
    std::size_t fallback = 0;
};

/// Always the same arm.
struct ConstantRule {
    std::size_t arity = 2;
    std::size_t arm = 0;
};

using StageRule =
    std::variant<FixedProbsRule, SoftmaxRule, LogisticRule, LinearArgmaxRule, SignRule, TabularRule, ConstantRule>;

enum class PolicyKind { Deterministic, Stochastic };

inline bool is_deterministic(const StageRule& r) {
    return std::holds_alternative<LinearArgmaxRule>(r) || std::holds_alternative<SignRule>(r) ||
           std::holds_alternative<TabularRule>(r) || std::holds_alternative<ConstantRule>(r);
}

inline std::size_t rule_arity(const StageRule& r) {
    return std::visit(
        [](const auto& rule) -> std::size_t {
            using T = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<T, FixedProbsRule>) return rule.probs.size();
            if constexpr (std::is_same_v<T, SoftmaxRule>) return rule.psi.size();
            if constexpr (std::is_same_v<T, LogisticRule>) return 2;
            if constexpr (std::is_same_v<T, LinearArgmaxRule>) return rule.features.arms;
            if constexpr (std::is_same_v<T, SignRule>) return 2;
            if constexpr (std::is_same_v<T, TabularRule>) return rule.arity;
            if constexpr (std::is_same_v<T, ConstantRule>) return rule.arity;
        },
        r);
}

inline double logistic(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace detail {

inline Vector softmax_probs(const SoftmaxRule& rule, std::span<const double> x) {
    const Vector phi = rule.features.apply(x);
    Vector s(rule.psi.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (rule.psi[k].size() != phi.size())
            throw SchemaError("soft-max coefficient block has wrong length");
        s[k] = -dot(phi, rule.psi[k]);
    }
    const double m = *std::max_element(s.begin(), s.end());
    double total = 0.0;
    for (auto& v : s) {
        v = std::exp(v - m);
        total += v;
    }
    for (auto& v : s) v /= total;
    return s;
}

inline std::size_t deterministic_arm(const StageRule& r, std::span<const double> x) {
    return std::visit(
        [&](const auto& rule) -> std::size_t {
            using T = std::decay_t<decltype(rule)>;
            if constexpr (std::is_same_v<T, LinearArgmaxRule>) {
                Vector q(rule.features.arms);
                for (std::size_t a = 0; a < q.size(); ++a) q[a] = rule.features.evaluate(x, a, rule.theta);
                return argmax_lowest(q);
            } else if constexpr (std::is_same_v<T, SignRule>) {
                const Vector phi = rule.features.apply(x);
                return dot(phi, rule.coef) > 0.0 ? 1 : 0;
            } else if constexpr (std::is_same_v<T, TabularRule>) {
                if (x.size() != rule.input_dim) throw SchemaError("tabular rule: state length mismatch");
                std::vector<long long> key(x.size());
                for (std::size_t i = 0; i < x.size(); ++i) key[i] = std::llround(x[i]);
                auto it = rule.table.find(key);
                return it == rule.table.end() ? rule.fallback : it->second;
            } else if constexpr (std::is_same_v<T, ConstantRule>) {
                return rule.arm;
            } else {
                throw SchemaError("stochastic rule has no deterministic arm");
            }
        },
        r);
}

}  // namespace detail

/// Per-stage decision rules. For indefinite horizons (or stages beyond the
/// list) the last rule applies.
class PolicySpec {
  public:
    PolicySpec() = default;
    explicit PolicySpec(std::vector<StageRule> rules) : rules_(std::move(rules)) {
        if (rules_.empty()) throw SchemaError("policy needs at least one stage rule");
    }
    explicit PolicySpec(StageRule rule) : PolicySpec(std::vector<StageRule>{std::move(rule)}) {}

    static PolicySpec uniform(std::size_t arms) {
        return PolicySpec(FixedProbsRule{Vector(arms, 1.0 / static_cast<double>(arms))});
    }
    static PolicySpec constant(std::size_t arms, std::size_t arm) {
        return PolicySpec(ConstantRule{arms, arm});
    }

    PolicyKind kind() const noexcept {
        for (const auto& r : rules_)
            if (!is_deterministic(r)) return PolicyKind::Stochastic;
        return PolicyKind::Deterministic;
    }

    std::size_t stages() const noexcept { return rules_.size(); }
    const StageRule& rule(std::size_t stage) const {
        if (rules_.empty()) throw SchemaError("empty policy");
        return rules_[std::min(stage, rules_.size() - 1)];
    }
    std::size_t arity(std::size_t stage) const { return rule_arity(rule(stage)); }

    /// Arm chosen by a deterministic stage rule.
    std::size_t act(std::size_t stage, std::span<const double> features) const {
        return detail::deterministic_arm(rule(stage), features);
    }

    Vector action_probs(std::size_t stage, std::span<const double> features) const {
        const StageRule& r = rule(stage);
        if (is_deterministic(r)) {
            Vector p(rule_arity(r), 0.0);
            p.at(detail::deterministic_arm(r, features)) = 1.0;
            return p;
        }
        return std::visit(
            [&](const auto& rule) -> Vector {
                using T = std::decay_t<decltype(rule)>;
                if constexpr (std::is_same_v<T, FixedProbsRule>) {
                    return rule.probs;
                } else if constexpr (std::is_same_v<T, SoftmaxRule>) {
                    return detail::softmax_probs(rule, features);
                } else if constexpr (std::is_same_v<T, LogisticRule>) {
                    const double p1 = logistic(dot(rule.features.apply(features), rule.theta));
                    return Vector{1.0 - p1, p1};
                } else {
                    throw SchemaError("unreachable policy rule");
                }
            },
            r);
    }

    double action_prob(std::size_t stage, std::span<const double> features, std::size_t arm) const {
        const Vector p = action_probs(stage, features);
        if (arm >= p.size()) throw IndexError("arm out of range for policy");
        return p[arm];
    }

  private:
    std::vector<StageRule> rules_;
};

/// Probability vector π_t(· | h_t). Deterministic policies yield one-hot vectors.
inline Vector policy_action_probs(const PolicySpec& policy, std::size_t stage,
                                  std::span<const double> features) {
    return policy.action_probs(stage, features);
}

}  // namespace seqpolicy
