#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/bandits/common.hpp"
#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/features.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

struct ActorCriticOptions {
    double pi_min = 0.1;
    double alpha_cc = 0.1;
    double lagrange = 0.0;
    double critic_lambda = 1.0;
    double theta_max = 20.0;
    std::size_t max_iterations = 10000;
};

/// One observed decision, already mapped to features: policy features g(x),
/// reward features f(x, 0) and f(x, 1).
struct ActorCriticRow {
    Vector g;
    Vector f0;
    Vector f1;
    std::size_t action = 0;
    double reward = 0.0;
};

struct ActorCriticState {
    Vector theta;
    Vector critic;
    double pi_min = 0.1;
    double alpha_cc = 0.1;
    double lagrange = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
    // Some |θ_j| ended on the box bound.
    bool unbounded = false;
    // Share of training contexts with π(1|x) outside [π_min, 1 − π_min].
    double violation_fraction = 0.0;

    bool chance_constraint_met() const noexcept { return violation_fraction <= alpha_cc; }

    /// π(1 | x; θ) = σ(g(x)ᵀθ).
    double prob_one(std::span<const double> g) const { return logistic(dot(g, theta)); }

    nlohmann::json to_json() const {
        return {{"theta", theta},
                {"critic", critic},
                {"pi_min", pi_min},
                {"alpha_cc", alpha_cc},
                {"lagrange", lagrange},
                {"objective", objective},
                {"iterations", iterations},
                {"status", unbounded ? "UNBOUNDED" : "OK"},
                {"violation_fraction", violation_fraction},
                {"chance_constraint_met", chance_constraint_met()}};
    }
};

namespace detail {

struct ActorObjective {
    std::vector<Vector> g;
    Vector advantage;  // Q̂(x,1) − Q̂(x,0)
    double baseline = 0.0;  // P_N[Q̂(x,0)]
    Matrix m;  // P_N[g gᵀ]
    double lagrange = 0.0;

    double value(std::span<const double> theta) const {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += advantage[i] * logistic(dot(g[i], theta));
        const Vector mt = m * theta;
        return baseline + s / static_cast<double>(g.size()) - lagrange * dot(theta, mt);
    }

    Vector gradient(std::span<const double> theta) const {
        Vector grad(theta.size(), 0.0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double p = logistic(dot(g[i], theta));
            const double c = advantage[i] * p * (1.0 - p);
            for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += c * g[i][j];
        }
        const Vector mt = m * theta;
        for (std::size_t j = 0; j < grad.size(); ++j)
            grad[j] = grad[j] / static_cast<double>(g.size()) - 2.0 * lagrange * mt[j];
        return grad;
    }
};

}  // namespace detail

/// Critic: ridge regression of the reward on f(x, A). Actor: maximizes
///   Ĵ(θ) = P_N[Σ_a Q̂(x,a)π(a|x;θ)] − λ θᵀP_N[g gᵀ]θ
/// over the box |θ_j| ≤ theta_max by projected gradient ascent from θ = 0.
/// Step schedule: start at 1; an accepted step (sufficient increase) doubles
/// the step, a rejected one halves it. Stops when the projected move falls
/// below 1e-12 in every coordinate or after max_iterations.
inline ActorCriticState actor_critic_fit_rows(const std::vector<ActorCriticRow>& rows, const ActorCriticOptions& opt) {
    if (rows.empty()) throw SchemaError("actor-critic needs at least one observation");
    if (!(opt.pi_min > 0.0 && opt.pi_min < 0.5)) throw ParameterError("pi_min must lie in (0, 0.5)");
    if (!(opt.alpha_cc > 0.0 && opt.alpha_cc < 1.0)) throw ParameterError("alpha_cc must lie in (0, 1)");
    if (!(opt.lagrange >= 0.0)) throw ParameterError("lagrange multiplier must be >= 0");
    if (!(opt.theta_max > 0.0)) throw ParameterError("theta_max must be > 0");
    const std::size_t q = rows[0].g.size(), p = rows[0].f0.size();
    Matrix fx;
    Vector y;
    for (const auto& r : rows) {
        if (r.action > 1) throw SchemaError("actor-critic needs binary actions, got " + std::to_string(r.action));
        if (r.g.size() != q || r.f0.size() != p || r.f1.size() != p)
            throw SchemaError("actor-critic rows have inconsistent feature lengths");
        fx.append_row(r.action == 1 ? r.f1 : r.f0);
        y.push_back(r.reward);
    }

    ActorCriticState st;
    st.pi_min = opt.pi_min;
    st.alpha_cc = opt.alpha_cc;
    st.lagrange = opt.lagrange;
    st.critic = ridge_fit(fx, y, opt.critic_lambda);

    detail::ActorObjective obj;
    obj.lagrange = opt.lagrange;
    obj.m = Matrix(q, q);
    for (const auto& r : rows) {
        const double q0 = dot(r.f0, st.critic), q1 = dot(r.f1, st.critic);
        obj.g.push_back(r.g);
        obj.advantage.push_back(q1 - q0);
        obj.baseline += q0;
        add_outer(obj.m, r.g);
    }
    const double n = static_cast<double>(rows.size());
    obj.baseline /= n;
    obj.m *= 1.0 / n;

    Vector theta(q, 0.0);
    double value = obj.value(theta);
    double step = 1.0;
    std::size_t it = 0;
    for (; it < opt.max_iterations; ++it) {
        const Vector grad = obj.gradient(theta);
        bool accepted = false, moved = false;
        while (step > 1e-20) {
            Vector trial(q);
            double move = 0.0, ascent = 0.0;
            for (std::size_t j = 0; j < q; ++j) {
                trial[j] = std::clamp(theta[j] + step * grad[j], -opt.theta_max, opt.theta_max);
                move = std::max(move, std::fabs(trial[j] - theta[j]));
                ascent += grad[j] * (trial[j] - theta[j]);
            }
            if (move < 1e-12) break;
            moved = true;
            const double tv = obj.value(trial);
            if (tv >= value + 1e-4 * ascent) {
                theta = std::move(trial);
                value = tv;
                step = std::min(step * 2.0, 1e12);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted || !moved) break;
    }
    st.theta = theta;
    st.objective = value;
    st.iterations = it;
    for (double v : theta) st.unbounded = st.unbounded || std::fabs(v) >= opt.theta_max * (1.0 - 1e-12);

    std::size_t bad = 0;
    for (const auto& r : rows) {
        const double p1 = st.prob_one(r.g);
        bad += (p1 < opt.pi_min || p1 > 1.0 - opt.pi_min);
    }
    st.violation_fraction = static_cast<double>(bad) / n;
    return st;
}

/// Every record of every trajectory is one (x, A, Y) observation.
inline ActorCriticState actor_critic_fit(const Dataset& data, const FeatureMap& policy_features,
                                         const ArmFeatureMap& reward_features, const ActorCriticOptions& opt = {}) {
    data.require_complete("actor_critic_fit");
    if (reward_features.arms != 2) throw SchemaError("actor-critic reward features must cover two arms");
    std::vector<ActorCriticRow> rows;
    for (const auto& tr : data.trajectories())
        for (const auto& r : tr.records)
            rows.push_back({policy_features.apply(r.state), reward_features.apply(r.state, 0),
                            reward_features.apply(r.state, 1), r.action, *r.reward});
    return actor_critic_fit_rows(rows, opt);
}

struct ActorCriticAgentOptions {
    ActorCriticOptions fit;
    std::size_t burn_in = 10;
    std::size_t refit_every = 10;
};

/// Two-arm online actor-critic. Policy features are the agent's state vector
/// with an intercept; critic features are the arm features supplied by the
/// environment. Refits from its whole history every `refit_every` updates.
class ActorCriticAgent final : public Agent {
  public:
    explicit ActorCriticAgent(ActorCriticAgentOptions opt = {}) : opt_(opt), burn_(opt.burn_in) {
        if (opt.refit_every == 0) throw ParameterError("refit_every must be >= 1");
    }

    std::string name() const override { return "actor_critic"; }

    Selection select(const DecisionContext& ctx, RngStream& rng) override {
        if (ctx.arm_features.size() != 2) throw SchemaError("actor-critic agent needs exactly two arms");
        pending_ = ActorCriticRow{policy_features(ctx.state), ctx.arm_features[0], ctx.arm_features[1], 0, 0.0};
        const bool burning = burn_.active() || !fitted_;
        burn_.tick();
        if (burning) {
            const Selection s = detail::uniform_selection(2, rng);
            pending_->action = s.arm;
            return s;
        }
        const double p1 = fitted_->prob_one(pending_->g);
        const std::size_t arm = rng.uniform() < p1 ? 1 : 0;
        pending_->action = arm;
        return {arm, arm == 1 ? p1 : 1.0 - p1};
    }

    void observe_forced(const DecisionContext& ctx, std::size_t arm) override {
        if (ctx.arm_features.size() != 2) throw SchemaError("actor-critic agent needs exactly two arms");
        pending_ = ActorCriticRow{policy_features(ctx.state), ctx.arm_features[0], ctx.arm_features[1], arm, 0.0};
    }

    void update(std::span<const double>, double reward) override {
        if (!pending_) throw SchemaError("actor-critic update without a preceding select");
        pending_->reward = reward;
        rows_.push_back(std::move(*pending_));
        pending_.reset();
        if (rows_.size() % opt_.refit_every == 0) fitted_ = actor_critic_fit_rows(rows_, opt_.fit);
    }

    nlohmann::json snapshot() const override {
        nlohmann::json j = {{"agent", name()}, {"steps", burn_.seen()}, {"observations", rows_.size()}};
        j["fit"] = fitted_ ? fitted_->to_json() : nlohmann::json(nullptr);
        return j;
    }

    const std::optional<ActorCriticState>& fitted() const noexcept { return fitted_; }

  private:
    static Vector policy_features(std::span<const double> x) {
        Vector g{1.0};
        g.insert(g.end(), x.begin(), x.end());
        return g;
    }

    ActorCriticAgentOptions opt_;
    detail::BurnIn burn_;
    std::optional<ActorCriticRow> pending_;
    std::vector<ActorCriticRow> rows_;
    std::optional<ActorCriticState> fitted_;
};

}  // namespace seqpolicy
