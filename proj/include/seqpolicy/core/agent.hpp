#pragma once

#include <cstddef>
#include <memory>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

/// Arm chosen at one decision point together with the probability the
/// selecting mechanism assigned to it.
struct Selection {
    std::size_t arm = 0;
    double prob = 1.0;
};

/// What an online agent sees at one decision point: the raw state and the
/// per-arm reward features f(x, a, ·).
struct DecisionContext {
    std::span<const double> state;
    const std::vector<Vector>& arm_features;
};

/// Online decision maker driven by the micro-randomized trial simulator.
/// Mutable, single writer: one instance per simulated user.
class Agent {
  public:
    virtual ~Agent() = default;
    virtual std::string name() const = 0;
    virtual Selection select(const DecisionContext& ctx, RngStream& rng) = 0;
    /// Feeds back the reward observed for the chosen arm's features.
    virtual void update(std::span<const double> chosen_features, double reward) = 0;
    /// Called instead of select when the environment picks the arm itself
    /// (burn-in), so agents that need the context can record it.
    virtual void observe_forced(const DecisionContext& /*ctx*/, std::size_t /*arm*/) {}
    virtual nlohmann::json snapshot() const = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

/// Adapter that runs a fixed PolicySpec (stage 0 rule, reused every step)
/// against the raw state. Never learns.
class PolicyAgent final : public Agent {
  public:
    explicit PolicyAgent(PolicySpec policy, std::string label = "policy")
        : policy_(std::move(policy)), label_(std::move(label)) {}

    std::string name() const override { return label_; }

    Selection select(const DecisionContext& ctx, RngStream& rng) override {
        const Vector p = policy_.action_probs(step_, ctx.state);
        if (p.size() != ctx.arm_features.size())
            throw SchemaError("policy arity " + std::to_string(p.size()) + " != environment arms " +
                              std::to_string(ctx.arm_features.size()));
        ++step_;
        const std::size_t arm = rng.categorical(p);
        return {arm, p[arm]};
    }

    void update(std::span<const double>, double) override {}

    nlohmann::json snapshot() const override { return {{"agent", label_}, {"step", step_}}; }

    const PolicySpec& policy() const noexcept { return policy_; }

  private:
    PolicySpec policy_;
    std::string label_;
    std::size_t step_ = 0;
};

}  // namespace seqpolicy
