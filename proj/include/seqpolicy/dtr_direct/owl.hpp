#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/features.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

/// f(h) = φ(h)ᵀcoef; arm 1 (+1) when f > 0, arm 0 (−1) otherwise.
struct LinearDecisionFn {
    FeatureMap features;
    Vector coef;

    double value(std::span<const double> h) const { return dot(features.apply(h), coef); }
    std::size_t arm(std::span<const double> h) const { return value(h) > 0.0 ? 1 : 0; }
    int sign(std::span<const double> h) const { return value(h) > 0.0 ? 1 : -1; }
    StageRule rule() const { return SignRule{features, coef}; }

    nlohmann::json to_json() const { return {{"feature_map", features.name()}, {"coefficients", coef}}; }

    friend bool operator==(const LinearDecisionFn&, const LinearDecisionFn&) = default;
};

inline double arm_sign(std::size_t arm) { return arm == 1 ? 1.0 : -1.0; }

struct OwlOptions {
    std::size_t iterations = 10000;
    // Length of step k is step_scale / √(k+1).
    double step_scale = 1.0;
    // Added after shifting negative outcomes so every weight stays positive.
    double shift_epsilon = 1e-6;
};

struct OwlFit {
    LinearDecisionFn fn;
    double objective = 0.0;
    // Amount added to Y before fitting (0 when Y ≥ 0 already).
    double outcome_shift = 0.0;
    // Best objective after each block of 100 iterations.
    std::vector<double> trace;
};

/// Weighted hinge problem min_β P_N[w·max(0, 1 − s·φᵀβ)] + λ‖β_slopes‖².
struct WeightedHingeProblem {
    FeatureMap features;
    std::vector<Vector> phi;
    Vector sign;
    Vector weight;
};

inline double hinge(double x) noexcept { return x < 1.0 ? 1.0 - x : 0.0; }

inline double owl_objective(const WeightedHingeProblem& p, std::span<const double> beta, double lambda) {
    double loss = 0.0;
    for (std::size_t i = 0; i < p.phi.size(); ++i) loss += p.weight[i] * hinge(p.sign[i] * dot(p.phi[i], beta));
    loss /= static_cast<double>(p.phi.size());
    double pen = 0.0;
    for (std::size_t j = p.features.slope_offset(); j < beta.size(); ++j) pen += beta[j] * beta[j];
    return loss + lambda * pen;
}

/// Proximal subgradient descent: a normalized hinge subgradient step of
/// length step_scale/√(k+1), then the exact prox of the ridge penalty on the
/// slopes; the intercept is not penalized. Normalizing makes the step
/// independent of the outcome scale. Returns the best iterate seen.
inline OwlFit solve_weighted_hinge(const WeightedHingeProblem& p, double lambda, const OwlOptions& opt) {
    if (!(lambda > 0.0)) throw ParameterError("OWL penalty lambda must be > 0");
    if (p.phi.empty()) throw SchemaError("OWL needs at least one observation");
    const std::size_t n = p.phi.size();
    const std::size_t d = p.features.dim();
    const std::size_t off = p.features.slope_offset();
    Vector beta(d, 0.0), g(d);
    OwlFit fit{LinearDecisionFn{p.features, beta}, owl_objective(p, beta, lambda), 0.0, {}};
    for (std::size_t k = 0; k < opt.iterations; ++k) {
        std::fill(g.begin(), g.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (p.weight[i] != 0.0 && p.sign[i] * dot(p.phi[i], beta) < 1.0)
                for (std::size_t j = 0; j < d; ++j) g[j] -= p.weight[i] * p.sign[i] * p.phi[i][j];
        const double gnorm = norm2(g);
        const double eta = opt.step_scale / std::sqrt(static_cast<double>(k + 1));
        // The prox step size is taken in units of the averaged loss.
        const double eta_loss = gnorm > 0.0 ? eta * static_cast<double>(n) / gnorm : eta;
        for (std::size_t j = 0; j < d; ++j) {
            if (gnorm > 0.0) beta[j] -= eta * g[j] / gnorm;
            if (j >= off) beta[j] /= 1.0 + 2.0 * eta_loss * lambda;
        }
        const double obj = owl_objective(p, beta, lambda);
        if (obj < fit.objective) {
            fit.objective = obj;
            fit.fn.coef = beta;
        }
        if ((k + 1) % 100 == 0) fit.trace.push_back(fit.objective);
    }
    return fit;
}

namespace detail {

inline void require_binary(const Dataset& data, const std::string& who) {
    const std::size_t stages = data.schema().is_fixed() ? data.horizon() : 1;
    for (std::size_t t = 0; t < stages; ++t)
        if (data.schema().arity(t) != 2) throw SchemaError(who + " needs two arms at every stage");
}

// Adds −min(y) + ε when some y is negative; returns the shift.
inline double shift_nonnegative(Vector& y, double eps) {
    const double m = *std::min_element(y.begin(), y.end());
    if (m >= 0.0) return 0.0;
    const double shift = -m + eps;
    for (auto& v : y) v += shift;
    return shift;
}

}  // namespace detail

/// Single-stage OWL with weights Y/π(A|H).
inline OwlFit owl_fit(const Dataset& data, const FeatureMap& features, double lambda, const OwlOptions& opt = {}) {
    if (!(lambda > 0.0)) throw ParameterError("OWL penalty lambda must be > 0");
    if (!data.schema().is_fixed() || data.horizon() != 1) throw SchemaError("owl_fit needs a single-stage dataset");
    detail::require_binary(data, "owl_fit");
    data.require_complete("owl_fit");
    Vector y;
    for (const auto& tr : data.trajectories()) y.push_back(*tr.records[0].reward);
    const double shift = detail::shift_nonnegative(y, opt.shift_epsilon);
    WeightedHingeProblem p{features, {}, {}, {}};
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data[i].records[0];
        p.phi.push_back(features.apply(r.state));
        p.sign.push_back(arm_sign(r.action));
        p.weight.push_back(y[i] * (1.0 / r.behavior_prob));
    }
    OwlFit fit = solve_weighted_hinge(p, lambda, opt);
    fit.outcome_shift = shift;
    return fit;
}

struct BowlFit {
    std::vector<OwlFit> stages;
    // Trajectories used at each stage.
    std::vector<std::size_t> retained;

    PolicySpec policy() const {
        std::vector<StageRule> rules;
        for (const auto& s : stages) rules.push_back(s.fn.rule());
        return PolicySpec(std::move(rules));
    }
};

/// Backward OWL. Stage t keeps the trajectories that follow the already
/// estimated rules at every later stage, uses the return from stage t onward
/// as outcome and weights it by Π_{τ≥t} 1/π_τ.
inline BowlFit bowl_fit(const Dataset& data, const std::vector<FeatureMap>& features, const Vector& lambdas,
                        const OwlOptions& opt = {}) {
    if (!data.schema().is_fixed()) throw SchemaError("bowl_fit needs a fixed-horizon dataset");
    const std::size_t horizon = data.horizon();
    if (features.size() != horizon || lambdas.size() != horizon)
        throw SchemaError("bowl_fit: need one feature map and one lambda per stage");
    for (double l : lambdas)
        if (!(l > 0.0)) throw ParameterError("OWL penalty lambda must be > 0");
    detail::require_binary(data, "bowl_fit");
    data.require_complete("bowl_fit");

    BowlFit out;
    out.stages.resize(horizon);
    out.retained.assign(horizon, 0);
    std::vector<bool> keep(data.size(), true);
    for (std::size_t t = horizon; t-- > 0;) {
        if (t + 1 < horizon) {
            const auto& later = out.stages[t + 1].fn;
            for (std::size_t i = 0; i < data.size(); ++i)
                if (keep[i] && later.arm(data[i].records[t + 1].state) != data[i].records[t + 1].action) keep[i] = false;
        }
        Vector y, inv;
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (!keep[i]) continue;
            const auto& recs = data[i].records;
            double ret = 0.0, w = 1.0;
            for (std::size_t tau = t; tau < horizon; ++tau) {
                ret += *recs[tau].reward;
                w *= 1.0 / recs[tau].behavior_prob;
            }
            y.push_back(ret);
            inv.push_back(w);
            idx.push_back(i);
        }
        out.retained[t] = idx.size();
        if (idx.empty()) throw SampleDepletionError("bowl_fit: no trajectory follows the estimated later-stage rules at stage " +
                                                    std::to_string(t), out.retained);
        const double shift = detail::shift_nonnegative(y, opt.shift_epsilon);
        WeightedHingeProblem p{features[t], {}, {}, {}};
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const auto& r = data[idx[k]].records[t];
            p.phi.push_back(features[t].apply(r.state));
            p.sign.push_back(arm_sign(r.action));
            p.weight.push_back(y[k] * inv[k]);
        }
        out.stages[t] = solve_weighted_hinge(p, lambdas[t], opt);
        out.stages[t].outcome_shift = shift;
    }
    return out;
}

/// ψ(x₁, x₂) = min(x₁ − 1, x₂ − 1, 0) + 1.
inline double sowl_surrogate(double x1, double x2) noexcept { return std::min({x1 - 1.0, x2 - 1.0, 0.0}) + 1.0; }

struct SowlOptions {
    std::size_t iterations = 5000;
    std::size_t restarts = 10;
    std::uint64_t seed = 0;
    double step_scale = 1.0;
    // Box |β_j| ≤ bound for the projection step.
    double bound = 100.0;
    double shift_epsilon = 1e-6;
};

struct SowlFit {
    LinearDecisionFn f0, f1;
    double objective = 0.0;
    double outcome_shift = 0.0;

    PolicySpec policy() const { return PolicySpec(std::vector<StageRule>{f0.rule(), f1.rule()}); }
};

/// Simultaneous OWL for two stages: maximizes
/// P_N[Y ψ(A₀f₀(H₀), A₁f₁(H₁)) / (π₀π₁)] − λ(‖f₀‖² + ‖f₁‖²) by projected
/// proximal supergradient ascent, best of `restarts` seeded starts (the
/// first start is β = 0). Y is the total return.
inline SowlFit sowl_fit(const Dataset& data, const FeatureMap& map0, const FeatureMap& map1, double lambda,
                        const SowlOptions& opt = {}) {
    if (!(lambda > 0.0)) throw ParameterError("SOWL penalty lambda must be > 0");
    if (!data.schema().is_fixed() || data.horizon() != 2) throw SchemaError("sowl_fit needs a two-stage dataset");
    if (opt.restarts == 0) throw ParameterError("SOWL needs at least one start");
    detail::require_binary(data, "sowl_fit");
    data.require_complete("sowl_fit");

    const std::size_t n = data.size();
    Vector y;
    for (const auto& tr : data.trajectories()) y.push_back(*tr.records[0].reward + *tr.records[1].reward);
    const double shift = detail::shift_nonnegative(y, opt.shift_epsilon);
    std::vector<Vector> p0, p1;
    Vector s0, s1, w;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& r = data[i].records;
        p0.push_back(map0.apply(r[0].state));
        p1.push_back(map1.apply(r[1].state));
        s0.push_back(arm_sign(r[0].action));
        s1.push_back(arm_sign(r[1].action));
        w.push_back(y[i] * (1.0 / r[0].behavior_prob) * (1.0 / r[1].behavior_prob));
    }
    const std::size_t d0 = map0.dim(), d1 = map1.dim();
    const std::size_t o0 = map0.slope_offset(), o1 = map1.slope_offset();

    auto objective = [&](const Vector& b0, const Vector& b1) {
        double gain = 0.0;
        for (std::size_t i = 0; i < n; ++i) gain += w[i] * sowl_surrogate(s0[i] * dot(p0[i], b0), s1[i] * dot(p1[i], b1));
        gain /= static_cast<double>(n);
        double pen = 0.0;
        for (std::size_t j = o0; j < d0; ++j) pen += b0[j] * b0[j];
        for (std::size_t j = o1; j < d1; ++j) pen += b1[j] * b1[j];
        return gain - lambda * pen;
    };

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += w[i] * (dot(p0[i], p0[i]) + dot(p1[i], p1[i]));
    scale /= static_cast<double>(n);
    const double eta0 = opt.step_scale / (scale > 0.0 ? scale : 1.0);

    RngStream rng(opt.seed, 0);
    SowlFit best{{map0, Vector(d0, 0.0)}, {map1, Vector(d1, 0.0)}, -std::numeric_limits<double>::infinity(), shift};
    for (std::size_t start = 0; start < opt.restarts; ++start) {
        RngStream r = rng.split("sowl-start", start);
        Vector b0(d0, 0.0), b1(d1, 0.0);
        if (start > 0) {
            for (auto& v : b0) v = r.normal();
            for (auto& v : b1) v = r.normal();
        }
        Vector best0 = b0, best1 = b1;
        double best_obj = objective(b0, b1);
        Vector g0(d0), g1(d1);
        for (std::size_t k = 0; k < opt.iterations; ++k) {
            std::fill(g0.begin(), g0.end(), 0.0);
            std::fill(g1.begin(), g1.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (w[i] == 0.0) continue;
                const double u = s0[i] * dot(p0[i], b0);
                const double v = s1[i] * dot(p1[i], b1);
                // Supergradient of the min: the active argument, none when capped.
                if (u < 1.0 && u <= v) {
                    for (std::size_t j = 0; j < d0; ++j) g0[j] += w[i] * s0[i] * p0[i][j];
                } else if (v < 1.0 && v < u) {
                    for (std::size_t j = 0; j < d1; ++j) g1[j] += w[i] * s1[i] * p1[i][j];
                }
            }
            const double eta = eta0 / std::sqrt(static_cast<double>(k + 1));
            for (std::size_t j = 0; j < d0; ++j) {
                b0[j] += eta * g0[j] / static_cast<double>(n);
                if (j >= o0) b0[j] /= 1.0 + 2.0 * eta * lambda;
                b0[j] = std::clamp(b0[j], -opt.bound, opt.bound);
            }
            for (std::size_t j = 0; j < d1; ++j) {
                b1[j] += eta * g1[j] / static_cast<double>(n);
                if (j >= o1) b1[j] /= 1.0 + 2.0 * eta * lambda;
                b1[j] = std::clamp(b1[j], -opt.bound, opt.bound);
            }
            const double obj = objective(b0, b1);
            if (obj > best_obj) {
                best_obj = obj;
                best0 = b0;
                best1 = b1;
            }
        }
        if (best_obj > best.objective) {
            best.objective = best_obj;
            best.f0.coef = best0;
            best.f1.coef = best1;
        }
    }
    return best;
}

}  // namespace seqpolicy
