#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/core/returns.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

struct ValueEstimate {
    double point = 0.0;
    double std_error = 0.0;
    double weight_min = 0.0;
    double weight_mean = 0.0;
    double weight_max = 0.0;
    // Kish effective sample size (Σw)²/Σw².
    double n_effective = 0.0;
    std::size_t n = 0;

    nlohmann::json to_json(const std::string& method) const {
        return {{"method", method},
                {"point", point},
                {"std_error", std_error},
                {"weights", {{"min", weight_min}, {"mean", weight_mean}, {"max", weight_max}}},
                {"n_effective", n_effective},
                {"n", n}};
    }
};

namespace detail {

inline void check_target(const Dataset& data, const PolicySpec& target) {
    const std::size_t stages = data.schema().is_fixed() ? data.horizon() : 1;
    for (std::size_t t = 0; t < stages; ++t)
        if (target.arity(t) != data.schema().arity(t))
            throw SchemaError("target policy arity " + std::to_string(target.arity(t)) + " != data arity " +
                              std::to_string(data.schema().arity(t)) + " at stage " + std::to_string(t));
}

/// Π_t 1[A_t = d_t(H_t)]/π_t for deterministic stage rules and d(A_t|H_t)/π_t
/// for stochastic ones.
inline double trajectory_weight(const Trajectory& tr, const PolicySpec& target) {
    double w = 1.0;
    for (std::size_t t = 0; t < tr.records.size(); ++t) {
        const auto& r = tr.records[t];
        const StageRule& rule = target.rule(t);
        double num;
        if (is_deterministic(rule))
            num = detail::deterministic_arm(rule, r.state) == r.action ? 1.0 : 0.0;
        else
            num = target.action_prob(t, r.state, r.action);
        if (num == 0.0) return 0.0;
        if (!(r.behavior_prob > 0.0))
            throw PositivityError("behavior probability is 0 for an action the target policy takes");
        w *= num / r.behavior_prob;
    }
    return w;
}

inline void fill_weight_summary(ValueEstimate& est, std::span<const double> w) {
    est.n = w.size();
    est.weight_min = *std::min_element(w.begin(), w.end());
    est.weight_max = *std::max_element(w.begin(), w.end());
    double s = 0.0, s2 = 0.0;
    for (double v : w) {
        s += v;
        s2 += v * v;
    }
    est.weight_mean = s / static_cast<double>(w.size());
    est.n_effective = s2 > 0.0 ? s * s / s2 : 0.0;
}

inline double sample_sd(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace detail

/// Per-trajectory weights w_{d,π}.
inline Vector importance_weights(const Dataset& data, const PolicySpec& target) {
    detail::check_target(data, target);
    Vector w;
    w.reserve(data.size());
    for (const auto& tr : data.trajectories()) w.push_back(detail::trajectory_weight(tr, target));
    return w;
}

/// Per-trajectory outcome Y: the discounted sum of all rewards.
inline Vector trajectory_outcomes(const Dataset& data, double gamma = 1.0) {
    data.require_complete("value estimation");
    Vector y;
    y.reserve(data.size());
    for (const auto& tr : data.trajectories()) y.push_back(discounted_return(tr, 0, gamma));
    return y;
}

/// P_N[w Y].
inline ValueEstimate estimate_value_mc(const Dataset& data, const PolicySpec& target, double gamma = 1.0) {
    const Vector y = trajectory_outcomes(data, gamma);
    const Vector w = importance_weights(data, target);
    ValueEstimate est;
    detail::fill_weight_summary(est, w);
    Vector terms(y.size());
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        terms[i] = w[i] * y[i];
        s += terms[i];
    }
    est.point = s / static_cast<double>(y.size());
    est.std_error = detail::sample_sd(terms, est.point) / std::sqrt(static_cast<double>(y.size()));
    return est;
}

/// P_N[w Y] / P_N[w].
inline ValueEstimate estimate_value_iptw(const Dataset& data, const PolicySpec& target, double gamma = 1.0) {
    const Vector y = trajectory_outcomes(data, gamma);
    const Vector w = importance_weights(data, target);
    ValueEstimate est;
    detail::fill_weight_summary(est, w);
    double swy = 0.0, sw = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        swy += w[i] * y[i];
        sw += w[i];
    }
    if (!(sw > 0.0)) throw OverlapError("no trajectory carries positive weight under the target policy");
    est.point = swy / sw;
    // Delta-method standard error of the ratio.
    Vector infl(y.size());
    const double wbar = sw / static_cast<double>(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) infl[i] = w[i] * (y[i] - est.point) / wbar;
    est.std_error = detail::sample_sd(infl, 0.0) / std::sqrt(static_cast<double>(y.size()));
    return est;
}

/// μ(a, h) and π(a | h) for single-stage AIPTW.
using OutcomeModel = std::function<double(std::size_t arm, std::span<const double> h)>;
using PropensityModel = std::function<double(std::size_t arm, std::span<const double> h)>;

/// Single-stage, two-arm AIPTW for a deterministic regime d:
/// P_N{ I·Y/π_d − (I − π_d)/π_d · μ_d } with I = 1[A = d(H)], π_d = π(d(H)|H)
/// and μ_d = μ(d(H), H). Without a propensity model the recorded behavior
/// probability is used (1 − behavior_prob when d(H) ≠ A).
inline ValueEstimate estimate_value_aiptw(const Dataset& data, const PolicySpec& target, const OutcomeModel& mu,
                                          const std::optional<PropensityModel>& propensity = std::nullopt) {
    if (!data.schema().is_fixed() || data.horizon() != 1)
        throw SchemaError("AIPTW needs a single-stage dataset");
    if (data.schema().arity(0) != 2) throw SchemaError("AIPTW needs two arms");
    detail::check_target(data, target);
    if (!is_deterministic(target.rule(0))) throw SchemaError("AIPTW target must be a deterministic regime");
    data.require_complete("AIPTW");

    const std::size_t n = data.size();
    Vector terms(n), w(n);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = data[i].records[0];
        const std::size_t d = target.act(0, r.state);
        const double ind = d == r.action ? 1.0 : 0.0;
        double pd;
        if (propensity)
            pd = (*propensity)(d, r.state);
        else
            pd = d == r.action ? r.behavior_prob : 1.0 - r.behavior_prob;
        if (!(pd > 0.0 && pd < 1.0))
            throw PositivityError("propensity " + std::to_string(pd) + " outside (0,1) in row " + std::to_string(i));
        const double mu_d = mu(d, r.state);
        w[i] = ind / pd;
        terms[i] = w[i] * *r.reward - (ind - pd) / pd * mu_d;
        s += terms[i];
    }
    ValueEstimate est;
    detail::fill_weight_summary(est, w);
    est.point = s / static_cast<double>(n);
    est.std_error = detail::sample_sd(terms, est.point) / std::sqrt(static_cast<double>(n));
    return est;
}

}  // namespace seqpolicy
