#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/bandits/common.hpp"
#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/json.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

/// Ridge sufficient statistics B = λI + Σφφᵀ, b = Σφy over the chosen arms.
struct LinBanditState {
    Matrix big_b;
    Vector b_vec;
    double lambda_ridge = 1.0;
    std::size_t t = 0;

    static LinBanditState fresh(std::size_t dim, double lambda_ridge = 1.0) {
        if (dim == 0) throw ParameterError("bandit feature dimension must be >= 1");
        if (!(lambda_ridge > 0.0)) throw ParameterError("bandit ridge lambda must be > 0");
        return {Matrix::identity(dim, lambda_ridge), Vector(dim, 0.0), lambda_ridge, 0};
    }

    std::size_t dim() const noexcept { return b_vec.size(); }
    Cholesky factor() const { return Cholesky(big_b); }
    /// μ̂ = B⁻¹b.
    Vector mean() const { return factor().solve(b_vec); }

    nlohmann::json to_json() const {
        return {{"B", matrix_to_json(big_b)}, {"b", b_vec}, {"lambda", lambda_ridge}, {"t", t}};
    }
    static LinBanditState from_json(const nlohmann::json& j) {
        LinBanditState s{matrix_from_json(j.at("B")), j.at("b").get<Vector>(), j.at("lambda").get<double>(),
                         j.at("t").get<std::size_t>()};
        if (!s.big_b.square() || s.big_b.rows() != s.b_vec.size()) throw SchemaError("bandit state shapes differ");
        return s;
    }

    friend bool operator==(const LinBanditState&, const LinBanditState&) = default;
};

namespace detail {

inline void check_arm_features(const LinBanditState& s, const std::vector<Vector>& arms) {
    if (arms.empty()) throw SchemaError("no arms to choose from");
    for (std::size_t a = 0; a < arms.size(); ++a)
        if (arms[a].size() != s.dim())
            throw SchemaError("arm " + std::to_string(a) + " has " + std::to_string(arms[a].size()) +
                              " features, state expects " + std::to_string(s.dim()));
}

}  // namespace detail

struct UcbChoice {
    std::size_t arm = 0;
    Vector ucb;
};

/// Û(a) = φ_aᵀμ̂ + α·s(a) with s(a) = √(φ_aᵀB⁻¹φ_a).
inline UcbChoice linucb_select(const LinBanditState& s, const std::vector<Vector>& arms, double alpha) {
    if (!(alpha >= 0.0)) throw ParameterError("LinUCB alpha must be >= 0");
    detail::check_arm_features(s, arms);
    const Cholesky f = s.factor();
    const Vector mu = f.solve(s.b_vec);
    UcbChoice out;
    out.ucb.resize(arms.size());
    for (std::size_t a = 0; a < arms.size(); ++a)
        out.ucb[a] = dot(arms[a], mu) + alpha * std::sqrt(f.inverse_quadratic_form(arms[a]));
    out.arm = argmax_lowest(out.ucb);
    return out;
}

/// s(a)² = φᵀB⁻¹φ.
inline double lin_bandit_width_sq(const LinBanditState& s, std::span<const double> phi) {
    if (phi.size() != s.dim()) throw SchemaError("feature length does not match bandit state");
    return s.factor().inverse_quadratic_form(phi);
}

inline void lin_bandit_update_inplace(LinBanditState& s, std::span<const double> phi, double reward) {
    if (phi.size() != s.dim()) throw SchemaError("feature length does not match bandit state");
    if (!std::isfinite(reward)) throw ParameterError("bandit reward must be finite");
    add_outer(s.big_b, phi);
    for (std::size_t i = 0; i < phi.size(); ++i) s.b_vec[i] += phi[i] * reward;
    ++s.t;
}

inline LinBanditState lin_bandit_update(LinBanditState s, std::span<const double> phi, double reward) {
    lin_bandit_update_inplace(s, phi, reward);
    return s;
}

/// Posterior of the ridge statistics factored once, for repeated draws.
class LinTsSampler {
  public:
    LinTsSampler(const LinBanditState& s, double nu) : factor_(s.factor()), mean_(factor_.solve(s.b_vec)), nu_(nu) {
        if (!(nu >= 0.0)) throw ParameterError("LinTS nu must be >= 0");
    }

    /// μ̃ ~ N(μ̂, ν²B⁻¹). ν = 0 is the point mass at μ̂.
    Vector draw(RngStream& rng) const {
        Vector out = mean_;
        if (nu_ > 0.0) {
            // B⁻¹ = L⁻ᵀL⁻¹, so L⁻ᵀz has covariance B⁻¹.
            Vector z(out.size());
            for (auto& v : z) v = rng.normal();
            const Vector dz = factor_.solve_upper(z);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += nu_ * dz[i];
        }
        return out;
    }

    std::size_t select(const std::vector<Vector>& arms, RngStream& rng) const {
        const Vector d = draw(rng);
        Vector scores(arms.size());
        for (std::size_t a = 0; a < arms.size(); ++a) scores[a] = dot(arms[a], d);
        return argmax_lowest(scores);
    }

  private:
    Cholesky factor_;
    Vector mean_;
    double nu_;
};

inline Vector lints_draw(const LinBanditState& s, double nu, RngStream& rng) { return LinTsSampler(s, nu).draw(rng); }

/// argmax_a φ_aᵀμ̃ for one draw μ̃ ~ N(μ̂, ν²B⁻¹).
inline std::size_t lints_select(const LinBanditState& s, const std::vector<Vector>& arms, double nu, RngStream& rng) {
    detail::check_arm_features(s, arms);
    return LinTsSampler(s, nu).select(arms, rng);
}

struct LinUcbOptions {
    double lambda_ridge = 1.0;
    double alpha = 1.0;
    std::size_t burn_in = 0;
};

struct LinTsOptions {
    // Prior precision B₀ = λI; 1 gives the identity prior.
    double lambda_ridge = 1.0;
    double nu = 1.0;
    std::size_t burn_in = 0;
    // Posterior draws used to estimate the selection probability that is
    // recorded as behavior_prob. 0 records the probability as 1.
    std::size_t propensity_draws = 100;
};

class LinUcbAgent final : public Agent {
  public:
    LinUcbAgent(std::size_t dim, LinUcbOptions opt = {})
        : opt_(opt), state_(LinBanditState::fresh(dim, opt.lambda_ridge)), burn_(opt.burn_in) {
        if (!(opt.alpha >= 0.0)) throw ParameterError("LinUCB alpha must be >= 0");
    }

    std::string name() const override { return "linucb"; }

    Selection select(const DecisionContext& ctx, RngStream& rng) override {
        const bool burning = burn_.active();
        burn_.tick();
        if (burning) return detail::uniform_selection(ctx.arm_features.size(), rng);
        return {linucb_select(state_, ctx.arm_features, opt_.alpha).arm, 1.0};
    }

    void update(std::span<const double> phi, double reward) override { lin_bandit_update_inplace(state_, phi, reward); }

    nlohmann::json snapshot() const override {
        return {{"agent", name()}, {"alpha", opt_.alpha}, {"steps", burn_.seen()}, {"state", state_.to_json()}};
    }

    const LinBanditState& state() const noexcept { return state_; }

  private:
    LinUcbOptions opt_;
    LinBanditState state_;
    detail::BurnIn burn_;
};

class LinTsAgent final : public Agent {
  public:
    LinTsAgent(std::size_t dim, LinTsOptions opt = {})
        : opt_(opt), state_(LinBanditState::fresh(dim, opt.lambda_ridge)), burn_(opt.burn_in) {
        if (!(opt.nu >= 0.0)) throw ParameterError("LinTS nu must be >= 0");
    }

    std::string name() const override { return "lints"; }

    Selection select(const DecisionContext& ctx, RngStream& rng) override {
        const bool burning = burn_.active();
        burn_.tick();
        if (burning) return detail::uniform_selection(ctx.arm_features.size(), rng);
        detail::check_arm_features(state_, ctx.arm_features);
        const LinTsSampler sampler(state_, opt_.nu);
        const std::size_t arm = sampler.select(ctx.arm_features, rng);
        double prob = 1.0;
        if (opt_.propensity_draws > 0 && opt_.nu > 0.0) {
            std::size_t hits = 0;
            for (std::size_t k = 0; k < opt_.propensity_draws; ++k) hits += sampler.select(ctx.arm_features, rng) == arm;
            // The realized draw counts as one more sample, so the estimate is > 0.
            prob = static_cast<double>(hits + 1) / static_cast<double>(opt_.propensity_draws + 1);
        }
        return {arm, prob};
    }

    void update(std::span<const double> phi, double reward) override { lin_bandit_update_inplace(state_, phi, reward); }

    nlohmann::json snapshot() const override {
        return {{"agent", name()}, {"nu", opt_.nu}, {"steps", burn_.seen()}, {"state", state_.to_json()}};
    }

    const LinBanditState& state() const noexcept { return state_; }

  private:
    LinTsOptions opt_;
    LinBanditState state_;
    detail::BurnIn burn_;
};

}  // namespace seqpolicy
