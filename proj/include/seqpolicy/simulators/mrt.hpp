#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"
#include "seqpolicy/simulators/recovery.hpp"

namespace seqpolicy {

/// What the agent is fed when a reward is MISSING.
enum class MissingUpdate {
    Skip,  // no update for that day
    Locf   // update with the user's last observed reward (skip if none yet)
};

/// Micro-randomized daily-message trial. Each day a context x ~ N(0,
/// context_sd² I) is drawn, one of K message categories is sent, and the
/// reward (daily step change) is f(x, a, z̄_a)ᵀβ + N(0, noise_sd²) with
/// f(x, a, z̄_a) = e_a ⊗ (1, x, z̄_a). z̄ is the habituation context.
struct MrtConfig {
    std::size_t arms = 2;
    std::size_t days = 100;
    int z_max = 7;
    std::size_t context_dim = 0;
    double context_sd = 1.0;
    Vector arm_intercept{0.0, 0.0};
    std::vector<Vector> arm_context_coef{{}, {}};
    Vector habituation_coef{0.0, 0.0};
    double noise_sd = 1.0;
    double missing_prob = 0.0;
    std::size_t burn_in_days = 0;
    bool round_rewards = false;
    bool zero_as_missing = false;
    MissingUpdate missing_update = MissingUpdate::Skip;

    std::size_t block_dim() const noexcept { return context_dim + 2; }
    std::size_t feature_dim() const noexcept { return arms * block_dim(); }
    std::size_t state_dim() const noexcept { return context_dim + arms; }

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        if (arms < 1) v.push_back("arms must be >= 1");
        if (days < 1) v.push_back("days must be >= 1");
        if (z_max < 1) v.push_back("z_max must be >= 1");
        if (!(context_sd >= 0.0)) v.push_back("context_sd must be >= 0");
        if (arm_intercept.size() != arms) v.push_back("arm_intercept: expected one entry per arm");
        if (habituation_coef.size() != arms) v.push_back("habituation_coef: expected one entry per arm");
        if (arm_context_coef.size() != arms) {
            v.push_back("arm_context_coef: expected one row per arm");
        } else {
            for (std::size_t a = 0; a < arms; ++a)
                if (arm_context_coef[a].size() != context_dim)
                    v.push_back("arm_context_coef[" + std::to_string(a) + "]: expected context_dim entries");
        }
        if (!(noise_sd > 0.0)) v.push_back("noise_sd must be > 0");
        if (!(missing_prob >= 0.0 && missing_prob < 1.0)) v.push_back("missing_prob must lie in [0,1)");
        return v;
    }

    void validate() const {
        auto v = violations();
        if (!v.empty()) throw ConfigError(std::move(v));
    }

    /// True β in the feature layout of arm_features().
    Vector true_coefficients() const {
        Vector beta;
        for (std::size_t a = 0; a < arms; ++a) {
            beta.push_back(arm_intercept[a]);
            beta.insert(beta.end(), arm_context_coef[a].begin(), arm_context_coef[a].end());
            beta.push_back(habituation_coef[a]);
        }
        return beta;
    }

    /// f(x, a, z̄_a) for every arm.
    std::vector<Vector> arm_features(std::span<const double> x, std::span<const double> zbar) const {
        std::vector<Vector> out(arms, Vector(feature_dim(), 0.0));
        for (std::size_t a = 0; a < arms; ++a) {
            const std::size_t off = a * block_dim();
            out[a][off] = 1.0;
            for (std::size_t j = 0; j < context_dim; ++j) out[a][off + 1 + j] = x[j];
            out[a][off + 1 + context_dim] = zbar[a];
        }
        return out;
    }

    Vector true_means(const std::vector<Vector>& features) const {
        const Vector beta = true_coefficients();
        Vector m(features.size());
        for (std::size_t a = 0; a < features.size(); ++a) m[a] = dot(features[a], beta);
        return m;
    }
};

/// max_a μ_a - μ_chosen.
inline double immediate_regret(std::span<const double> true_means, std::size_t chosen) {
    if (chosen >= true_means.size()) throw IndexError("chosen arm out of range");
    return *std::max_element(true_means.begin(), true_means.end()) - true_means[chosen];
}

struct RegretRow {
    std::size_t user = 0;
    std::size_t day = 0;
    std::size_t chosen_arm = 0;
    double regret = 0.0;
    double cum_regret = 0.0;
    bool optimal = false;
};

struct MrtResult {
    Dataset data;
    std::vector<RegretRow> trace;
};

/// Runs every user for cfg.days with a fresh agent from `make_agent`.
/// Environment draws (context, noise, missingness) come from a per-user
/// stream independent of the agent's stream, so two policies run on the same
/// seed see identical contexts and noise.
inline MrtResult simulate_mrt(const MrtConfig& cfg, const AgentFactory& make_agent, std::size_t n_users,
                              const RngStream& rng) {
    cfg.validate();
    if (n_users == 0) throw ParameterError("simulate_mrt: n_users must be >= 1");
    std::vector<Trajectory> trs;
    std::vector<RegretRow> trace;
    trs.reserve(n_users);
    trace.reserve(n_users * cfg.days);
    const double uniform_prob = 1.0 / static_cast<double>(cfg.arms);

    for (std::size_t u = 0; u < n_users; ++u) {
        RngStream env = rng.split("mrt-env", u);
        RngStream pick = rng.split("mrt-agent", u);
        auto agent = make_agent();
        RecoveryContext recovery = RecoveryContext::rested(cfg.arms, cfg.z_max);
        Trajectory tr{"u" + std::to_string(u), {}};
        tr.records.reserve(cfg.days);
        double cum = 0.0;
        std::optional<double> last_observed;

        for (std::size_t day = 0; day < cfg.days; ++day) {
            Vector x(cfg.context_dim);
            for (auto& v : x) v = cfg.context_sd * env.normal();
            const Vector zbar = recovery.habituation(cfg.z_max);
            const auto features = cfg.arm_features(x, zbar);
            Vector state = x;
            state.insert(state.end(), zbar.begin(), zbar.end());

            Selection sel;
            if (day < cfg.burn_in_days) {
                sel = {pick.uniform_index(cfg.arms), uniform_prob};
                agent->observe_forced(DecisionContext{state, features}, sel.arm);
            } else {
                sel = agent->select(DecisionContext{state, features}, pick);
                if (sel.arm >= cfg.arms)
                    throw SchemaError("agent '" + agent->name() + "' chose arm " + std::to_string(sel.arm) +
                                      " but the environment has " + std::to_string(cfg.arms));
            }

            const Vector means = cfg.true_means(features);
            double y = means[sel.arm] + cfg.noise_sd * env.normal();
            const bool dropped = env.uniform() < cfg.missing_prob;
            if (cfg.round_rewards) y = std::round(y);
            Reward reward = y;
            if (dropped || (cfg.zero_as_missing && y == 0.0)) reward = kMissing;

            if (reward) {
                agent->update(features[sel.arm], *reward);
                last_observed = *reward;
            } else if (cfg.missing_update == MissingUpdate::Locf && last_observed) {
                agent->update(features[sel.arm], *last_observed);
            }

            const double regret = immediate_regret(means, sel.arm);
            cum += regret;
            trace.push_back(RegretRow{u, day, sel.arm, regret, cum, regret == 0.0});
            tr.records.push_back(StageRecord{std::move(state), sel.arm, reward, sel.prob});
            recovery = update_recovery_context(recovery, sel.arm, cfg.z_max);
        }
        trs.push_back(std::move(tr));
    }
    return {Dataset(Schema::indefinite({cfg.arms, cfg.state_dim()}), std::move(trs)), std::move(trace)};
}

}  // namespace seqpolicy
