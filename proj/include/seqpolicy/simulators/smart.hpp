#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

inline double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) noexcept {
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

/// Mean outcome intercept + coefᵀs + arm_intercept[a] + arm_coef[a]ᵀs, plus
/// N(0, noise_sd²) noise.
struct LinearOutcomeModel {
    double intercept = 0.0;
    Vector coef;
    Vector arm_intercept;
    std::vector<Vector> arm_coef;
    double noise_sd = 1.0;

    double mean(std::span<const double> s, std::size_t arm) const {
        return intercept + dot(coef, s) + arm_intercept.at(arm) + dot(arm_coef.at(arm), s);
    }

    /// Coefficients in the stacked affine parameterization: block a is
    /// (intercept + arm_intercept[a], coef + arm_coef[a]).
    Vector stacked() const {
        Vector out;
        for (std::size_t a = 0; a < arm_intercept.size(); ++a) {
            out.push_back(intercept + arm_intercept[a]);
            for (std::size_t j = 0; j < coef.size(); ++j) out.push_back(coef[j] + arm_coef[a][j]);
        }
        return out;
    }

    void validate(const std::string& name, std::size_t dim, std::size_t arms,
                  std::vector<std::string>& out) const {
        if (coef.size() != dim)
            out.push_back(name + ".coef: expected " + std::to_string(dim) + " entries, got " +
                          std::to_string(coef.size()));
        if (arm_intercept.size() != arms)
            out.push_back(name + ".arm_intercept: expected " + std::to_string(arms) + " entries");
        if (arm_coef.size() != arms)
            out.push_back(name + ".arm_coef: expected " + std::to_string(arms) + " rows");
        for (std::size_t a = 0; a < arm_coef.size(); ++a)
            if (arm_coef[a].size() != dim)
                out.push_back(name + ".arm_coef[" + std::to_string(a) + "]: expected " +
                              std::to_string(dim) + " entries");
        if (!(noise_sd > 0.0)) out.push_back(name + ".noise_sd must be > 0");
    }
};

/// Stage-1 logistic randomization P(A=1 | x) = σ(intercept + coefᵀx) for a
/// confounded (observational) two-arm first stage.
struct LogisticPropensity {
    double intercept = 0.0;
    Vector coef;

    double prob_one(std::span<const double> x) const { return logistic(intercept + dot(coef, x)); }
};

/// Two-stage SMART. Baseline state x₀ ~ N(0, I_p). Stage-2 history is
/// h₁ = (x₀, one-hot of A₀ for arms 1..K₁-1, R₁, responder flag), and a unit
/// responds when R₁ >= responder_threshold.
struct SmartConfig {
    std::size_t state_dim = 1;
    std::size_t stage1_arms = 2;
    Vector stage1_probs{0.5, 0.5};
    std::optional<LogisticPropensity> stage1_propensity;
    LinearOutcomeModel stage1;
    double responder_threshold = 0.0;
    std::size_t stage2_arms = 2;
    Vector stage2_probs_responder{0.5, 0.5};
    Vector stage2_probs_nonresponder{0.5, 0.5};
    bool rerandomize_responders = true;
    LinearOutcomeModel stage2;

    std::size_t history_dim() const noexcept { return state_dim + stage1_arms - 1 + 2; }
    std::size_t r1_index() const noexcept { return state_dim + stage1_arms - 1; }
    std::size_t responder_index() const noexcept { return r1_index() + 1; }

    Schema schema() const {
        return Schema::fixed({{stage1_arms, state_dim}, {stage2_arms, history_dim()}});
    }

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        auto check_probs = [&](const Vector& p, std::size_t arms, const std::string& name) {
            if (p.size() != arms) {
                v.push_back(name + ": expected " + std::to_string(arms) + " probabilities");
                return;
            }
            double s = 0.0;
            for (double x : p) {
                if (!(x > 0.0 && x < 1.0)) v.push_back(name + ": probabilities must lie in (0,1)");
                s += x;
            }
            if (std::fabs(s - 1.0) > 1e-9) v.push_back(name + ": probabilities must sum to 1");
        };
        if (stage1_arms < 2) v.push_back("stage1_arms must be >= 2");
        if (stage2_arms < 2) v.push_back("stage2_arms must be >= 2");
        if (stage1_propensity) {
            if (stage1_arms != 2) v.push_back("stage1_propensity requires stage1_arms = 2");
            if (stage1_propensity->coef.size() != state_dim)
                v.push_back("stage1_propensity.coef: expected " + std::to_string(state_dim) + " entries");
        } else {
            check_probs(stage1_probs, stage1_arms, "stage1_probs");
        }
        if (rerandomize_responders) check_probs(stage2_probs_responder, stage2_arms, "stage2_probs_responder");
        check_probs(stage2_probs_nonresponder, stage2_arms, "stage2_probs_nonresponder");
        if (std::isnan(responder_threshold)) v.push_back("responder_threshold is NaN");
        stage1.validate("stage1", state_dim, stage1_arms, v);
        stage2.validate("stage2", history_dim(), stage2_arms, v);
        return v;
    }

    void validate() const {
        auto v = violations();
        if (!v.empty()) throw ConfigError(std::move(v));
    }

    Vector stage1_behavior(std::span<const double> x0) const {
        if (stage1_propensity) {
            const double p1 = stage1_propensity->prob_one(x0);
            return {1.0 - p1, p1};
        }
        return stage1_probs;
    }

    Vector history(std::span<const double> x0, std::size_t a0, double r1) const {
        Vector h(x0.begin(), x0.end());
        for (std::size_t k = 1; k < stage1_arms; ++k) h.push_back(a0 == k ? 1.0 : 0.0);
        h.push_back(r1);
        h.push_back(r1 >= responder_threshold ? 1.0 : 0.0);
        return h;
    }

    bool is_responder(std::span<const double> h1) const { return h1[responder_index()] > 0.5; }
};

/// Analytic ground truth of a SmartConfig.
class SmartTruth {
  public:
    explicit SmartTruth(SmartConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const SmartConfig& config() const noexcept { return cfg_; }

    double stage2_q(std::span<const double> h1, std::size_t a1) const { return cfg_.stage2.mean(h1, a1); }

    /// Arms available at stage 2: responders who are not rerandomized stay on arm 0.
    std::vector<std::size_t> feasible_stage2_arms(bool responder) const {
        if (responder && !cfg_.rerandomize_responders) return {0};
        std::vector<std::size_t> arms(cfg_.stage2_arms);
        for (std::size_t a = 0; a < arms.size(); ++a) arms[a] = a;
        return arms;
    }

    std::size_t optimal_stage2(std::span<const double> h1) const {
        const auto arms = feasible_stage2_arms(cfg_.is_responder(h1));
        std::size_t best = arms.front();
        for (std::size_t a : arms)
            if (stage2_q(h1, a) > stage2_q(h1, best)) best = a;
        return best;
    }

    /// Q₁(x₀, a₀) = E[R₁ + max_a Q₂(H₁, a) | x₀, a₀], integrated exactly: for
    /// fixed (x₀, a₀) each Q₂(·, a) is affine in R₁ on either side of the
    /// responder threshold, so the upper envelope is piecewise affine and each
    /// piece has a closed-form Gaussian expectation.
    double stage1_q(std::span<const double> x0, std::size_t a0) const {
        const double m = cfg_.stage1.mean(x0, a0);
        const double s = cfg_.stage1.noise_sd;
        const double tau = cfg_.responder_threshold;
        const double inf = std::numeric_limits<double>::infinity();
        double total = m;
        // Responder region [tau, inf), nonresponder region (-inf, tau).
        for (int resp = 0; resp <= 1; ++resp) {
            const double lo = resp ? tau : -inf;
            const double hi = resp ? inf : tau;
            if (!(hi > lo)) continue;
            Vector h = cfg_.history(x0, a0, 0.0);
            h[cfg_.responder_index()] = resp;
            std::vector<std::pair<double, double>> lines;  // (intercept, slope in r1)
            for (std::size_t a : feasible_stage2_arms(resp == 1)) {
                const double c = cfg_.stage2.mean(h, a);
                const double e = cfg_.stage2.coef[cfg_.r1_index()] + cfg_.stage2.arm_coef[a][cfg_.r1_index()];
                lines.emplace_back(c, e);
            }
            total += envelope_expectation(lines, lo, hi, m, s);
        }
        return total;
    }

    std::size_t optimal_stage1(std::span<const double> x0) const {
        Vector q(cfg_.stage1_arms);
        for (std::size_t a = 0; a < q.size(); ++a) q[a] = stage1_q(x0, a);
        return argmax_lowest(q);
    }

    std::size_t optimal_arm(std::size_t stage, std::span<const double> state) const {
        if (stage == 0) return optimal_stage1(state);
        if (stage == 1) return optimal_stage2(state);
        throw IndexError("SMART has two stages");
    }

    /// True Q coefficients in the stacked affine map over the stage state.
    /// Stage 2 is always linear. Stage 1 is linear only when the stage-2 arm
    /// contrasts do not depend on x₀, R₁ or the responder flag, the common
    /// part has no responder effect, and responders are rerandomized.
    std::optional<Vector> linear_q_coefficients(std::size_t stage) const {
        if (stage == 1) return cfg_.stage2.stacked();
        if (stage != 0) throw IndexError("SMART has two stages");
        if (!stage1_is_linear()) return std::nullopt;
        const std::size_t p = cfg_.state_dim;
        Vector out;
        Vector x(p, 0.0);
        for (std::size_t a = 0; a < cfg_.stage1_arms; ++a) {
            const double q0 = stage1_q(x, a);
            out.push_back(q0);
            for (std::size_t j = 0; j < p; ++j) {
                x[j] = 1.0;
                out.push_back(stage1_q(x, a) - q0);
                x[j] = 0.0;
            }
        }
        return out;
    }

    bool stage1_is_linear() const {
        if (!cfg_.rerandomize_responders) return false;
        const auto& m = cfg_.stage2;
        if (m.coef[cfg_.responder_index()] != 0.0) return false;
        for (std::size_t a = 0; a < cfg_.stage2_arms; ++a) {
            for (std::size_t j = 0; j < cfg_.state_dim; ++j)
                if (m.arm_coef[a][j] != 0.0) return false;
            if (m.arm_coef[a][cfg_.r1_index()] != 0.0 || m.arm_coef[a][cfg_.responder_index()] != 0.0)
                return false;
        }
        return true;
    }

    /// Marginal P(R₁ >= threshold) under the stage-1 randomization
    /// (closed form for non-confounded designs: R₁ | a₀ is Gaussian).
    double responder_probability() const {
        if (cfg_.stage1_propensity) throw ParameterError("closed form needs state-independent stage-1 probabilities");
        double p = 0.0;
        for (std::size_t a = 0; a < cfg_.stage1_arms; ++a) {
            const auto& m = cfg_.stage1;
            const double mu = m.intercept + m.arm_intercept[a];
            double var = m.noise_sd * m.noise_sd;
            for (std::size_t j = 0; j < cfg_.state_dim; ++j) {
                const double c = m.coef[j] + m.arm_coef[a][j];
                var += c * c;
            }
            p += cfg_.stage1_probs[a] * (1.0 - normal_cdf((cfg_.responder_threshold - mu) / std::sqrt(var)));
        }
        return p;
    }

  private:
    // E[max_k (c_k + e_k r) ; lo < r < hi] for r ~ N(m, s²).
    static double envelope_expectation(const std::vector<std::pair<double, double>>& lines, double lo,
                                       double hi, double m, double s) {
        std::vector<double> cuts{lo, hi};
        for (std::size_t i = 0; i < lines.size(); ++i)
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                const double de = lines[j].second - lines[i].second;
                if (de == 0.0) continue;
                const double r = (lines[i].first - lines[j].first) / de;
                if (r > lo && r < hi) cuts.push_back(r);
            }
        std::sort(cuts.begin(), cuts.end());
        double total = 0.0;
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const double a = cuts[k], b = cuts[k + 1];
            if (!(b > a)) continue;
            double mid;
            if (std::isinf(a) && std::isinf(b))
                mid = 0.0;
            else if (std::isinf(a))
                mid = b - 1.0;
            else if (std::isinf(b))
                mid = a + 1.0;
            else
                mid = 0.5 * (a + b);
            std::size_t best = 0;
            for (std::size_t i = 1; i < lines.size(); ++i)
                if (lines[i].first + lines[i].second * mid > lines[best].first + lines[best].second * mid) best = i;
            const double za = std::isinf(a) ? -std::numeric_limits<double>::infinity() : (a - m) / s;
            const double zb = std::isinf(b) ? std::numeric_limits<double>::infinity() : (b - m) / s;
            const double prob = normal_cdf(zb) - normal_cdf(za);
            const double pa = std::isinf(za) ? 0.0 : normal_pdf(za);
            const double pb = std::isinf(zb) ? 0.0 : normal_pdf(zb);
            const double first_moment = m * prob + s * (pa - pb);
            total += lines[best].first * prob + lines[best].second * first_moment;
        }
        return total;
    }

    SmartConfig cfg_;
};

struct SmartSample {
    Dataset data;
    SmartTruth truth;
};

/// n two-stage trajectories. Each unit draws from its own child stream, so
/// the result is a pure function of (cfg, n, rng seed/stream).
inline SmartSample simulate_smart(const SmartConfig& cfg, std::size_t n, const RngStream& rng) {
    cfg.validate();
    if (n == 0) throw ParameterError("simulate_smart: n must be >= 1");
    std::vector<Trajectory> trs;
    trs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream r = rng.split("smart-unit", i);
        Vector x0(cfg.state_dim);
        for (auto& v : x0) v = r.normal();
        const Vector p0 = cfg.stage1_behavior(x0);
        const std::size_t a0 = r.categorical(p0);
        const double r1 = cfg.stage1.mean(x0, a0) + cfg.stage1.noise_sd * r.normal();
        Vector h1 = cfg.history(x0, a0, r1);
        const bool responder = cfg.is_responder(h1);
        std::size_t a1 = 0;
        double p1 = 1.0;
        if (responder && !cfg.rerandomize_responders) {
            a1 = 0;
        } else {
            const Vector& probs = responder ? cfg.stage2_probs_responder : cfg.stage2_probs_nonresponder;
            a1 = r.categorical(probs);
            p1 = probs[a1];
        }
        const double y2 = cfg.stage2.mean(h1, a1) + cfg.stage2.noise_sd * r.normal();
        Trajectory tr{"u" + std::to_string(i), {}};
        tr.records.push_back(StageRecord{std::move(x0), a0, r1, p0[a0]});
        tr.records.push_back(StageRecord{std::move(h1), a1, y2, p1});
        trs.push_back(std::move(tr));
    }
    return {Dataset(cfg.schema(), std::move(trs)), SmartTruth(cfg)};
}

/// Single-stage dataset holding stage t of every trajectory.
inline Dataset stage_slice(const Dataset& data, std::size_t t) {
    std::vector<Trajectory> trs;
    trs.reserve(data.size());
    for (const auto& tr : data.trajectories()) trs.push_back(Trajectory{tr.unit_id, {tr.records.at(t)}});
    return Dataset(Schema::fixed({data.schema().at(t)}), std::move(trs));
}

}  // namespace seqpolicy
