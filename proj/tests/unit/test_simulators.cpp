#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include <gtest/gtest.h>

#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/simulators/chain.hpp"
#include "seqpolicy/simulators/locf.hpp"
#include "seqpolicy/simulators/mrt.hpp"
#include "seqpolicy/simulators/recovery.hpp"
#include "seqpolicy/simulators/smart.hpp"

using namespace seqpolicy;

namespace {

Trajectory rewards_only(std::vector<Reward> rewards) {
    Trajectory tr{"u", {}};
    for (auto r : rewards) tr.records.push_back(StageRecord{{}, 0, r, 1.0});
    return tr;
}

std::vector<Reward> rewards_of(const Trajectory& tr) {
    std::vector<Reward> out;
    for (const auto& r : tr.records) out.push_back(r.reward);
    return out;
}

SmartConfig basic_smart() {
    SmartConfig c;
    c.state_dim = 1;
    c.stage1 = {0.5, {1.0}, {0.0, 0.8}, {{0.0}, {-0.6}}, 1.0};
    c.responder_threshold = 0.5;
    const std::size_t hd = c.history_dim();  // x0, a0 dummy, r1, responder
    c.stage2 = {0.0, Vector(hd, 0.0), {0.0, 0.3}, {Vector(hd, 0.0), Vector(hd, 0.0)}, 1.0};
    c.stage2.coef[c.r1_index()] = 0.5;
    c.stage2.arm_coef[1][0] = -1.0;
    c.stage2.arm_coef[1][c.responder_index()] = 0.7;
    return c;
}

// Plays arm (step mod K).
class RoundRobin final : public Agent {
  public:
    std::string name() const override { return "round_robin"; }
    Selection select(const DecisionContext& ctx, RngStream&) override {
        return {step_++ % ctx.arm_features.size(), 1.0};
    }
    void update(std::span<const double>, double) override {}
    nlohmann::json snapshot() const override { return {{"step", step_}}; }

  private:
    std::size_t step_ = 0;
};

class Counting final : public Agent {
  public:
    explicit Counting(std::shared_ptr<std::vector<double>> seen) : seen_(std::move(seen)) {}
    std::string name() const override { return "counting"; }
    Selection select(const DecisionContext&, RngStream&) override { return {0, 1.0}; }
    void update(std::span<const double>, double y) override { seen_->push_back(y); }
    nlohmann::json snapshot() const override { return {}; }

  private:
    std::shared_ptr<std::vector<double>> seen_;
};

AgentFactory policy_agent(PolicySpec p) {
    return [p] { return std::make_unique<PolicyAgent>(p); };
}

MrtConfig two_arm_mrt(double mean0, double mean1, double habituation, std::size_t days) {
    MrtConfig c;
    c.arms = 2;
    c.days = days;
    c.arm_intercept = {mean0, mean1};
    c.arm_context_coef = {{}, {}};
    c.habituation_coef = {habituation, habituation};
    c.noise_sd = 1.0;
    return c;
}

}  // namespace

TEST(RecoveryContext, ChosenArmResets) {
    EXPECT_EQ(update_recovery_context({{3, 5}}, 0, 7).z, (std::vector<int>{0, 6}));
}

TEST(RecoveryContext, SaturatesAtZmax) {
    EXPECT_EQ(update_recovery_context({{3, 7}}, 0, 7).z, (std::vector<int>{0, 7}));
}

TEST(RecoveryContext, UnchosenArmsIncrement) {
    EXPECT_EQ(update_recovery_context({{0, 0}}, 1, 7).z, (std::vector<int>{1, 0}));
}

TEST(RecoveryContext, ActionOutOfRange) {
    EXPECT_THROW(update_recovery_context({{1, 1}}, 2, 7), IndexError);
    EXPECT_THROW(RecoveryContext::rested(2, 0), ParameterError);
}

TEST(RecoveryContext, InvariantsHoldAlongRandomPlay) {
    RngStream rng(11);
    const int z_max = 5;
    auto ctx = RecoveryContext::rested(4, z_max);
    for (int step = 0; step < 2000; ++step) {
        const std::size_t a = rng.uniform_index(4);
        ctx = update_recovery_context(ctx, a, z_max);
        ASSERT_EQ(std::count(ctx.z.begin(), ctx.z.end(), 0), 1);
        ASSERT_EQ(ctx.z[a], 0);
        for (int v : ctx.z) ASSERT_TRUE(v >= 0 && v <= z_max);
    }
}

TEST(Locf, CarriesLastObservation) {
    EXPECT_EQ(rewards_of(apply_locf(rewards_only({1.0, kMissing, kMissing, 4.0}))),
              (std::vector<Reward>{1.0, 1.0, 1.0, 4.0}));
}

TEST(Locf, CompleteTrajectoryUnchanged) {
    const auto tr = rewards_only({1.0, 2.0, 3.0});
    EXPECT_EQ(apply_locf(tr), tr);
}

TEST(Locf, LeadingGapBecomesZero) {
    EXPECT_EQ(rewards_of(apply_locf(rewards_only({kMissing, 2.0}))), (std::vector<Reward>{0.0, 2.0}));
}

TEST(SimulateSmart, InfiniteNegativeThresholdMakesEveryoneRespond) {
    auto c = basic_smart();
    c.responder_threshold = -std::numeric_limits<double>::infinity();
    c.stage2_probs_responder = {0.25, 0.75};
    c.stage2_probs_nonresponder = {0.5, 0.5};
    const auto s = simulate_smart(c, 1000, RngStream(3));
    for (const auto& tr : s.data.trajectories()) {
        ASSERT_TRUE(c.is_responder(tr.records[1].state));
        const double expected = tr.records[1].action == 0 ? 0.25 : 0.75;
        ASSERT_DOUBLE_EQ(tr.records[1].behavior_prob, expected);
    }
}

TEST(SimulateSmart, SymmetricArmsHaveNoMeanDifference) {
    auto c = basic_smart();
    c.stage1.arm_intercept = {0.2, 0.2};
    c.stage1.arm_coef = {{0.4}, {0.4}};
    const std::size_t n = 10000;
    const auto s = simulate_smart(c, n, RngStream(5));
    double sum[2] = {0, 0}, sq[2] = {0, 0};
    double cnt[2] = {0, 0};
    for (const auto& tr : s.data.trajectories()) {
        const auto& r = tr.records[0];
        sum[r.action] += *r.reward;
        sq[r.action] += *r.reward * *r.reward;
        cnt[r.action] += 1;
    }
    const double m0 = sum[0] / cnt[0], m1 = sum[1] / cnt[1];
    const double all_mean = (sum[0] + sum[1]) / n;
    const double sd = std::sqrt((sq[0] + sq[1]) / n - all_mean * all_mean);
    EXPECT_LT(std::fabs(m0 - m1), 3.0 * sd / std::sqrt(n / 2.0));
}

TEST(SimulateSmart, ResponderFractionMatchesNormalCdf) {
    const auto c = basic_smart();
    const auto s = simulate_smart(c, 10000, RngStream(8));
    double responders = 0;
    for (const auto& tr : s.data.trajectories()) responders += c.is_responder(tr.records[1].state);
    // R1 | a ~ N(mu_a, slope_a² + sd²) with x0 ~ N(0,1); mix over the 50/50 randomization.
    const double p0 = 0.5 * (1 - normal_cdf((0.5 - 0.5) / std::sqrt(1.0 + 1.0)));
    const double p1 = 0.5 * (1 - normal_cdf((0.5 - 1.3) / std::sqrt(0.16 + 1.0)));
    EXPECT_NEAR(responders / 10000.0, p0 + p1, 0.02);
    EXPECT_NEAR(s.truth.responder_probability(), p0 + p1, 1e-12);
}

TEST(SimulateSmart, StageOneQMatchesMonteCarlo) {
    auto c = basic_smart();
    for (bool rerand : {true, false}) {
        c.rerandomize_responders = rerand;
        c.stage2_probs_responder = {0.5, 0.5};
        const SmartTruth truth(c);
        RngStream rng(21);
        const Vector x0{0.3};
        for (std::size_t a0 = 0; a0 < 2; ++a0) {
            const int draws = 400000;
            double acc = 0.0;
            for (int i = 0; i < draws; ++i) {
                const double r1 = c.stage1.mean(x0, a0) + c.stage1.noise_sd * rng.normal();
                const Vector h = c.history(x0, a0, r1);
                double best = c.stage2.mean(h, 0);
                if (rerand || !c.is_responder(h)) best = std::max(best, c.stage2.mean(h, 1));
                acc += r1 + best;
            }
            EXPECT_NEAR(truth.stage1_q(x0, a0), acc / draws, 0.01) << "rerandomize=" << rerand << " a0=" << a0;
        }
    }
}

TEST(SimulateSmart, BehaviorProbAudit) {
    auto c = basic_smart();
    c.stage1_propensity = LogisticPropensity{0.2, {1.5}};
    c.stage2_probs_nonresponder = {0.3, 0.7};
    const auto s = simulate_smart(c, 500, RngStream(9));
    for (const auto& tr : s.data.trajectories()) {
        const auto& r0 = tr.records[0];
        ASSERT_DOUBLE_EQ(r0.behavior_prob, c.stage1_behavior(r0.state)[r0.action]);
        const auto& r1 = tr.records[1];
        const Vector& p = c.is_responder(r1.state) ? c.stage2_probs_responder : c.stage2_probs_nonresponder;
        ASSERT_DOUBLE_EQ(r1.behavior_prob, p[r1.action]);
    }
}

TEST(SimulateSmart, InvalidConfigListsAllViolations) {
    auto c = basic_smart();
    c.stage1_probs = {0.7, 0.7};
    c.stage2.noise_sd = 0.0;
    try {
        simulate_smart(c, 10, RngStream(1));
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_GE(e.violations().size(), 2u);
    }
    EXPECT_THROW(simulate_smart(basic_smart(), 0, RngStream(1)), ParameterError);
}

TEST(SimulateSmart, DeterministicGivenSeed) {
    const auto a = simulate_smart(basic_smart(), 200, RngStream(77));
    const auto b = simulate_smart(basic_smart(), 200, RngStream(77));
    EXPECT_EQ(a.data, b.data);
    const auto other = simulate_smart(basic_smart(), 200, RngStream(78));
    EXPECT_FALSE(a.data == other.data);
}

TEST(SimulateMrt, NoMissingWhenProbabilityZero) {
    auto c = two_arm_mrt(1.0, 0.4, 0.0, 200);
    const auto r = simulate_mrt(c, policy_agent(PolicySpec::uniform(2)), 5, RngStream(1));
    EXPECT_FALSE(r.data.has_missing());
}

TEST(SimulateMrt, MissingRateApproximatesProbability) {
    auto c = two_arm_mrt(1.0, 0.4, 0.0, 5000);
    c.missing_prob = 0.3;
    const auto r = simulate_mrt(c, policy_agent(PolicySpec::uniform(2)), 1, RngStream(2));
    double missing = 0;
    for (const auto& rec : r.data[0].records) missing += !rec.reward;
    EXPECT_NEAR(missing / 5000.0, 0.3, 3.0 * std::sqrt(0.21 / 5000.0));
}

TEST(SimulateMrt, UniformPolicyRegret) {
    const auto c = two_arm_mrt(1.0, 0.4, 0.0, 10000);
    const auto r = simulate_mrt(c, policy_agent(PolicySpec::uniform(2)), 1, RngStream(4));
    EXPECT_NEAR(r.trace.back().cum_regret / 10000.0, 0.3, 0.02);
}

TEST(SimulateMrt, BurnInUsesUniformProbability) {
    auto c = two_arm_mrt(1.0, 0.4, 0.0, 30);
    c.burn_in_days = 14;
    const auto r = simulate_mrt(c, policy_agent(PolicySpec::constant(2, 1)), 3, RngStream(6));
    for (const auto& tr : r.data.trajectories())
        for (std::size_t d = 0; d < tr.records.size(); ++d)
            ASSERT_EQ(tr.records[d].behavior_prob, d < 14 ? 0.5 : 1.0) << d;
}

TEST(SimulateMrt, RepeatingOneArmLosesToRoundRobinUnderHabituation) {
    auto c = two_arm_mrt(1.0, 1.0, -0.3, 5000);
    const RngStream rng(12);
    const auto repeat = simulate_mrt(c, policy_agent(PolicySpec::constant(2, 0)), 1, rng);
    const auto robin = simulate_mrt(c, [] { return std::make_unique<RoundRobin>(); }, 1, rng);
    // Same environment stream, so day-by-day differences remove the shared noise of contexts.
    double sum = 0, sq = 0;
    for (std::size_t d = 0; d < c.days; ++d) {
        const double diff = *robin.data[0].records[d].reward - *repeat.data[0].records[d].reward;
        sum += diff;
        sq += diff * diff;
    }
    const double n = static_cast<double>(c.days);
    const double mean = sum / n;
    const double se = std::sqrt((sq / n - mean * mean) / n);
    EXPECT_GT(mean, 3.0 * se);
}

TEST(SimulateMrt, BehaviorProbMatchesReplayedPolicy) {
    MrtConfig c = two_arm_mrt(0.5, 0.2, -0.1, 300);
    c.context_dim = 2;
    c.arm_context_coef = {{0.3, -0.2}, {0.1, 0.4}};
    // Stochastic policy on the recorded state (x, z̄).
    const PolicySpec pol(LogisticRule{FeatureMap{c.state_dim(), true}, {0.1, 0.8, -0.5, 0.2, -0.2}});
    const auto r = simulate_mrt(c, policy_agent(pol), 4, RngStream(13));
    for (const auto& tr : r.data.trajectories())
        for (const auto& rec : tr.records)
            ASSERT_DOUBLE_EQ(rec.behavior_prob, pol.action_prob(0, rec.state, rec.action));
}

TEST(SimulateMrt, RecordedHabituationFollowsRecoveryUpdate) {
    MrtConfig c = two_arm_mrt(0.5, 0.2, -0.1, 100);
    c.arms = 3;
    c.arm_intercept = {0.1, 0.2, 0.3};
    c.arm_context_coef = {{}, {}, {}};
    c.habituation_coef = {0.0, 0.0, 0.0};
    c.z_max = 4;
    const auto r = simulate_mrt(c, policy_agent(PolicySpec::uniform(3)), 1, RngStream(14));
    auto ctx = RecoveryContext::rested(3, 4);
    for (const auto& rec : r.data[0].records) {
        ASSERT_EQ(rec.state, ctx.habituation(4));
        ctx = update_recovery_context(ctx, rec.action, 4);
    }
}

TEST(SimulateMrt, DeterministicGivenSeed) {
    auto c = two_arm_mrt(1.0, 0.4, -0.2, 200);
    c.missing_prob = 0.2;
    const auto a = simulate_mrt(c, policy_agent(PolicySpec::uniform(2)), 3, RngStream(99));
    const auto b = simulate_mrt(c, policy_agent(PolicySpec::uniform(2)), 3, RngStream(99));
    EXPECT_EQ(a.data, b.data);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) ASSERT_EQ(a.trace[i].cum_regret, b.trace[i].cum_regret);
}

TEST(SimulateMrt, ArityMismatchIsSchemaError) {
    const auto c = two_arm_mrt(1.0, 0.4, 0.0, 10);
    EXPECT_THROW(simulate_mrt(c, policy_agent(PolicySpec::uniform(3)), 1, RngStream(1)), SchemaError);
    EXPECT_THROW(simulate_mrt(c, policy_agent(PolicySpec::constant(3, 2)), 1, RngStream(1)), SchemaError);
}

TEST(SimulateMrt, RoundedZeroRewardsFlaggedMissing) {
    auto c = two_arm_mrt(0.0, 0.0, 0.0, 500);
    c.noise_sd = 0.3;
    c.round_rewards = true;
    c.zero_as_missing = true;
    const auto r = simulate_mrt(c, policy_agent(PolicySpec::uniform(2)), 1, RngStream(15));
    std::size_t missing = 0;
    for (const auto& rec : r.data[0].records) {
        if (!rec.reward)
            ++missing;
        else
            ASSERT_NE(*rec.reward, 0.0);
    }
    EXPECT_GT(missing, 400u);
}

TEST(SimulateMrt, LocfUpdateModeFeedsCarriedReward) {
    auto c = two_arm_mrt(1.0, 0.4, 0.0, 400);
    c.missing_prob = 0.4;
    auto seen_skip = std::make_shared<std::vector<double>>();
    auto seen_locf = std::make_shared<std::vector<double>>();
    const auto skip = simulate_mrt(c, [&] { return std::make_unique<Counting>(seen_skip); }, 1, RngStream(16));
    c.missing_update = MissingUpdate::Locf;
    simulate_mrt(c, [&] { return std::make_unique<Counting>(seen_locf); }, 1, RngStream(16));

    std::vector<double> expected_skip, expected_locf;
    std::optional<double> last;
    for (const auto& rec : skip.data[0].records) {
        if (rec.reward) {
            expected_skip.push_back(*rec.reward);
            expected_locf.push_back(*rec.reward);
            last = rec.reward;
        } else if (last) {
            expected_locf.push_back(*last);
        }
    }
    EXPECT_EQ(*seen_skip, expected_skip);
    EXPECT_EQ(*seen_locf, expected_locf);
}

TEST(Chain, PolicyValueMatchesValueIteration) {
    ChainConfig c;
    c.transition = {{{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.1, 0.9}}};
    c.reward_mean = {{1.0, 0.0}, {0.0, 2.0}};
    c.initial = {0.5, 0.5};
    const PolicySpec pol(FixedProbsRule{{0.3, 0.7}});
    const double gamma = 0.8;
    const Vector v = c.policy_value(pol, gamma);
    Vector it{0.0, 0.0};
    for (int k = 0; k < 2000; ++k) {
        Vector next(2, 0.0);
        for (std::size_t s = 0; s < 2; ++s)
            for (std::size_t a = 0; a < 2; ++a)
                next[s] += pol.action_prob(0, c.one_hot(s), a) *
                           (c.reward_mean[s][a] + gamma * (c.transition[s][a][0] * it[0] + c.transition[s][a][1] * it[1]));
        it = next;
    }
    EXPECT_NEAR(v[0], it[0], 1e-10);
    EXPECT_NEAR(v[1], it[1], 1e-10);
}

TEST(Chain, SimulationIsDeterministicAndRecordsProbabilities) {
    ChainConfig c;
    c.transition = {{{0.9, 0.1}, {0.2, 0.8}}, {{0.5, 0.5}, {0.1, 0.9}}};
    c.reward_mean = {{1.0, 0.0}, {0.0, 2.0}};
    c.initial = {1.0, 0.0};
    const PolicySpec pol(FixedProbsRule{{0.3, 0.7}});
    const auto a = simulate_chain(c, pol, 20, 50, RngStream(5));
    EXPECT_EQ(a, simulate_chain(c, pol, 20, 50, RngStream(5)));
    for (const auto& tr : a.trajectories()) {
        EXPECT_EQ(tr.records[0].state, (Vector{1.0, 0.0}));
        for (const auto& r : tr.records) ASSERT_DOUBLE_EQ(r.behavior_prob, r.action == 0 ? 0.3 : 0.7);
    }
    c.initial = {0.5, 0.6};
    EXPECT_THROW(simulate_chain(c, pol, 1, 1, RngStream(5)), ConfigError);
}
