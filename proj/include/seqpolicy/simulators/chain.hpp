#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/lu.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

/// Finite homogeneous Markov chain with a Gaussian reward per (state, arm).
/// States are recorded one-hot.
struct ChainConfig {
    std::size_t states = 2;
    std::size_t arms = 2;
    // transition[s][a] is the distribution of the next state.
    std::vector<std::vector<Vector>> transition;
    std::vector<Vector> reward_mean;  // [s][a]
    double reward_sd = 1.0;
    Vector initial;  // distribution of the first state

    std::vector<std::string> violations() const {
        std::vector<std::string> v;
        auto is_dist = [&](const Vector& p, std::size_t n) {
            if (p.size() != n) return false;
            double s = 0.0;
            for (double x : p) {
                if (!(x >= 0.0)) return false;
                s += x;
            }
            return std::fabs(s - 1.0) <= 1e-9;
        };
        if (states < 1) v.push_back("states must be >= 1");
        if (arms < 1) v.push_back("arms must be >= 1");
        if (transition.size() != states) v.push_back("transition: expected one row per state");
        for (std::size_t s = 0; s < transition.size(); ++s) {
            if (transition[s].size() != arms) {
                v.push_back("transition[" + std::to_string(s) + "]: expected one row per arm");
                continue;
            }
            for (std::size_t a = 0; a < arms; ++a)
                if (!is_dist(transition[s][a], states))
                    v.push_back("transition[" + std::to_string(s) + "][" + std::to_string(a) +
                                "] is not a distribution over states");
        }
        if (reward_mean.size() != states) v.push_back("reward_mean: expected one row per state");
        for (const auto& row : reward_mean)
            if (row.size() != arms) v.push_back("reward_mean: expected one entry per arm");
        if (!(reward_sd >= 0.0)) v.push_back("reward_sd must be >= 0");
        if (!is_dist(initial, states)) v.push_back("initial is not a distribution over states");
        return v;
    }

    void validate() const {
        auto v = violations();
        if (!v.empty()) throw ConfigError(std::move(v));
    }

    Vector one_hot(std::size_t s) const {
        Vector x(states, 0.0);
        x.at(s) = 1.0;
        return x;
    }

    /// Exact discounted value of a policy that acts on the one-hot state:
    /// v = (I - γP_d)⁻¹ r_d.
    Vector policy_value(const PolicySpec& policy, double gamma) const {
        validate();
        if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("policy_value needs gamma in [0,1)");
        const std::size_t n = states;
        Matrix a = Matrix::identity(n);
        Vector r(n, 0.0);
        for (std::size_t s = 0; s < n; ++s) {
            const Vector pi = policy.action_probs(0, one_hot(s));
            for (std::size_t act = 0; act < arms; ++act) {
                r[s] += pi[act] * reward_mean[s][act];
                for (std::size_t t = 0; t < n; ++t) a(s, t) -= gamma * pi[act] * transition[s][act][t];
            }
        }
        return solve_linear(std::move(a), r);
    }
};

/// n trajectories of length T under `behavior` (stage-0 rule applied to the
/// one-hot state at every step).
inline Dataset simulate_chain(const ChainConfig& cfg, const PolicySpec& behavior, std::size_t n, std::size_t horizon,
                              const RngStream& rng) {
    cfg.validate();
    if (n == 0 || horizon == 0) throw ParameterError("simulate_chain: n and horizon must be >= 1");
    std::vector<Trajectory> trs;
    trs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream r = rng.split("chain-unit", i);
        std::size_t s = r.categorical(cfg.initial);
        Trajectory tr{"u" + std::to_string(i), {}};
        tr.records.reserve(horizon);
        for (std::size_t t = 0; t < horizon; ++t) {
            Vector x = cfg.one_hot(s);
            const Vector p = behavior.action_probs(t, x);
            if (p.size() != cfg.arms) throw SchemaError("behavior policy arity does not match chain arms");
            const std::size_t a = r.categorical(p);
            const double y = cfg.reward_mean[s][a] + cfg.reward_sd * r.normal();
            tr.records.push_back(StageRecord{std::move(x), a, y, p[a]});
            s = r.categorical(cfg.transition[s][a]);
        }
        trs.push_back(std::move(tr));
    }
    return Dataset(Schema::indefinite({cfg.arms, cfg.states}), std::move(trs));
}

}  // namespace seqpolicy
