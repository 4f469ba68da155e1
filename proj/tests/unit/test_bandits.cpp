#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>

#include <gtest/gtest.h>

#include "bandit_envs.hpp"
#include "nig_oracle.hpp"
#include "seqpolicy/bandits/actor_critic.hpp"
#include "seqpolicy/bandits/linear.hpp"
#include "seqpolicy/bandits/nig.hpp"
#include "seqpolicy/simulators/mrt.hpp"

using namespace seqpolicy;

namespace {

LinBanditState random_state(std::size_t d, std::size_t n, RngStream& rng) {
    LinBanditState s = LinBanditState::fresh(d, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        Vector phi(d);
        for (auto& v : phi) v = rng.normal();
        lin_bandit_update_inplace(s, phi, rng.normal());
    }
    return s;
}

std::vector<Vector> random_arms(std::size_t k, std::size_t d, RngStream& rng) {
    std::vector<Vector> arms(k, Vector(d));
    for (auto& a : arms)
        for (auto& v : a) v = rng.normal();
    return arms;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::fabs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace

// ---------------------------------------------------------------- LinUCB

TEST(LinUcb, ColdStartSymmetricFeaturesPicksArmZero) {
    const auto s = LinBanditState::fresh(3, 1.0);
    const std::vector<Vector> arms{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (double alpha : {0.0, 0.5, 3.0}) {
        const auto c = linucb_select(s, arms, alpha);
        EXPECT_EQ(c.arm, 0u);
        EXPECT_DOUBLE_EQ(c.ucb[0], c.ucb[1]);
        EXPECT_DOUBLE_EQ(c.ucb[1], c.ucb[2]);
    }
}

TEST(LinUcb, AlphaZeroExploits) {
    RngStream rng(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto s = random_state(4, 20, rng);
        const auto arms = random_arms(5, 4, rng);
        const Vector mu = s.mean();
        Vector m(arms.size());
        for (std::size_t a = 0; a < arms.size(); ++a) m[a] = dot(arms[a], mu);
        const auto best = static_cast<std::size_t>(std::max_element(m.begin(), m.end()) - m.begin());
        EXPECT_EQ(linucb_select(s, arms, 0.0).arm, best);
    }
}

TEST(LinUcb, HandEvaluatedOneDimensionalExample) {
    const LinBanditState s{Matrix{{2.0}}, Vector{2.0}, 1.0, 1};
    const auto c = linucb_select(s, {{1.0}, {2.0}}, 1.0);
    EXPECT_NEAR(c.ucb[0], 1.0 + std::sqrt(0.5), 1e-12);
    EXPECT_NEAR(c.ucb[1], 2.0 + std::sqrt(2.0), 1e-12);
    EXPECT_EQ(c.arm, 1u);
}

TEST(LinUcb, DimensionMismatchIsSchemaError) {
    const auto s = LinBanditState::fresh(2);
    EXPECT_THROW(linucb_select(s, {{1.0, 0.0}, {1.0}}, 1.0), SchemaError);
    EXPECT_THROW(linucb_select(s, {}, 1.0), SchemaError);
    EXPECT_THROW(linucb_select(s, {{1.0, 0.0}}, -1.0), ParameterError);
}

TEST(LinBanditUpdate, ZeroFeatureChangesOnlyStepCount) {
    const auto s = LinBanditState::fresh(3, 2.0);
    const auto u = lin_bandit_update(s, Vector{0, 0, 0}, 5.0);
    EXPECT_EQ(u.big_b, s.big_b);
    EXPECT_EQ(u.b_vec, s.b_vec);
    EXPECT_EQ(u.t, 1u);
}

TEST(LinBanditUpdate, HandRecursion) {
    const auto u = lin_bandit_update(LinBanditState::fresh(1, 1.0), Vector{1.0}, 2.0);
    EXPECT_DOUBLE_EQ(u.big_b(0, 0), 2.0);
    EXPECT_DOUBLE_EQ(u.b_vec[0], 2.0);
    EXPECT_DOUBLE_EQ(u.mean()[0], 1.0);
}

TEST(LinBanditUpdate, TwoUpdatesCommute) {
    const auto s = LinBanditState::fresh(2, 1.0);
    const Vector p{1.0, -2.0}, q{0.5, 3.0};
    const auto ab = lin_bandit_update(lin_bandit_update(s, p, 1.0), q, -2.0);
    const auto ba = lin_bandit_update(lin_bandit_update(s, q, -2.0), p, 1.0);
    EXPECT_EQ(ab.big_b, ba.big_b);
    EXPECT_EQ(ab.b_vec, ba.b_vec);
}

TEST(LinBanditProperty, WidthPositiveAndNonIncreasingUnderOwnUpdates) {
    RngStream rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        auto s = random_state(5, rep % 7, rng);
        Vector phi(5);
        for (auto& v : phi) v = rng.normal();
        double prev = lin_bandit_width_sq(s, phi);
        EXPECT_GT(prev, 0.0);
        for (int k = 0; k < 10; ++k) {
            lin_bandit_update_inplace(s, phi, rng.normal());
            const double w = lin_bandit_width_sq(s, phi);
            EXPECT_GT(w, 0.0);
            EXPECT_LE(w, prev * (1.0 + 1e-12));
            prev = w;
        }
    }
}

TEST(LinBanditState, JsonRoundTrip) {
    RngStream rng(6);
    const auto s = random_state(3, 5, rng);
    EXPECT_EQ(LinBanditState::from_json(nlohmann::json::parse(s.to_json().dump())), s);
}

// ---------------------------------------------------------------- LinTS

TEST(LinTs, NuZeroMatchesGreedyLinUcb) {
    RngStream rng(7);
    for (int rep = 0; rep < 50; ++rep) {
        const auto s = random_state(3, 10, rng);
        const auto arms = random_arms(4, 3, rng);
        RngStream draw(rep);
        EXPECT_EQ(lints_select(s, arms, 0.0, draw), linucb_select(s, arms, 0.0).arm);
    }
}

TEST(LinTs, FreshStateSymmetricArmsSplitEvenly) {
    const auto s = LinBanditState::fresh(2, 1.0);
    RngStream rng(8);
    std::size_t ones = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) ones += lints_select(s, {{1.0, 0.0}, {0.0, 1.0}}, 1.0, rng);
    EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.02);
}

TEST(LinTs, ConcentratesOnBetterArm) {
    auto s = LinBanditState::fresh(2, 1.0);
    RngStream rng(9);
    const std::vector<Vector> arms{{1.0, 0.0}, {0.0, 1.0}};
    for (std::size_t i = 0; i < 10000; ++i) {
        const std::size_t a = i % 2;
        lin_bandit_update_inplace(s, arms[a], (a == 1 ? 1.0 : 0.0) + 0.1 * rng.normal());
    }
    std::size_t ones = 0;
    for (int i = 0; i < 1000; ++i) ones += lints_select(s, arms, 1.0, rng);
    EXPECT_GE(ones, 990u);
}

TEST(LinTs, DrawCovarianceIsNuSquaredBInverse) {
    const LinBanditState s{Matrix{{2.0, 0.5}, {0.5, 1.0}}, Vector{1.0, -1.0}, 1.0, 0};
    // B⁻¹ by the 2×2 adjugate.
    const double det = 2.0 * 1.0 - 0.5 * 0.5;
    const double inv[2][2] = {{1.0 / det, -0.5 / det}, {-0.5 / det, 2.0 / det}};
    const double mean[2] = {inv[0][0] * 1.0 - inv[0][1], inv[1][0] * 1.0 - inv[1][1]};
    const double nu = 1.5;
    RngStream rng(10);
    const std::size_t n = 100000;
    double m[2] = {0, 0}, c[2][2] = {{0, 0}, {0, 0}};
    std::vector<Vector> draws;
    for (std::size_t i = 0; i < n; ++i) draws.push_back(lints_draw(s, nu, rng));
    for (const auto& d : draws)
        for (int j = 0; j < 2; ++j) m[j] += d[j] / n;
    for (const auto& d : draws)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) c[j][k] += (d[j] - m[j]) * (d[k] - m[k]) / (n - 1);
    for (int j = 0; j < 2; ++j) {
        EXPECT_NEAR(m[j], mean[j], 0.02);
        for (int k = 0; k < 2; ++k) EXPECT_NEAR(c[j][k], nu * nu * inv[j][k], 0.05);
    }
}

TEST(LinTsAgent, PropensityEstimateTracksSelectionFrequency) {
    LinTsOptions opt;
    opt.propensity_draws = 4000;
    LinTsAgent agent(2, opt);
    const std::vector<Vector> arms{{1.0, 0.0}, {0.0, 1.0}};
    for (int i = 0; i < 3; ++i) agent.update(arms[i % 2], 0.3 * i);
    RngStream rng(12);
    const auto sel = agent.select(DecisionContext{{}, arms}, rng);
    std::size_t hits = 0;
    RngStream other(99);
    for (int i = 0; i < 20000; ++i) hits += lints_select(agent.state(), arms, 1.0, other) == sel.arm;
    EXPECT_NEAR(sel.prob, hits / 20000.0, 0.03);
}

TEST(Agents, BurnInIsUniformAndRecordsOneOverK) {
    LinUcbOptions o;
    o.burn_in = 5;
    LinUcbAgent agent(2, o);
    RngStream rng(13);
    const std::vector<Vector> arms{{1.0, 0.0}, {0.0, 1.0}, {0.0, 0.0}};
    for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(agent.select(DecisionContext{{}, arms}, rng).prob, 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(agent.select(DecisionContext{{}, arms}, rng).prob, 1.0);
}

TEST(Agents, SelectUpdateSequenceIsReproducible) {
    const MrtConfig c = bandit_envs::stationary_three_arm(300);
    auto run = [&](auto make) {
        const auto res = simulate_mrt(c, make, 2, RngStream(14));
        std::vector<std::size_t> arms;
        for (const auto& r : res.trace) arms.push_back(r.chosen_arm);
        return arms;
    };
    auto ts = [&] { return std::make_unique<LinTsAgent>(c.feature_dim()); };
    auto nig = [&] { return std::make_unique<NigTsAgent>(NIGPosterior::standard(c.feature_dim())); };
    EXPECT_EQ(run(ts), run(ts));
    EXPECT_EQ(run(nig), run(nig));
}

TEST(Agents, SnapshotCarriesStateAndStepCount) {
    LinUcbAgent agent(2);
    RngStream rng(15);
    const std::vector<Vector> arms{{1.0, 0.0}, {0.0, 1.0}};
    for (int i = 0; i < 4; ++i) {
        const auto s = agent.select(DecisionContext{{}, arms}, rng);
        agent.update(arms[s.arm], 1.0);
    }
    const auto snap = nlohmann::json::parse(agent.snapshot().dump());
    EXPECT_EQ(snap.at("steps").get<std::size_t>(), 4u);
    EXPECT_EQ(LinBanditState::from_json(snap.at("state")), agent.state());
}

// ---------------------------------------------------------------- NIG

TEST(NigUpdate, NoDataReturnsPriorExactly) {
    const auto prior = NIGPosterior::standard(3, 2.0, 1.5, 0.7);
    const auto post = nig_update(prior, Matrix(0, 3), Vector{});
    EXPECT_EQ(post.mu, prior.mu);
    EXPECT_EQ(post.sigma, prior.sigma);
    EXPECT_EQ(post.a, prior.a);
    EXPECT_EQ(post.b, prior.b);
}

TEST(NigUpdate, ShapeGrowsByHalfTheRowCount) {
    RngStream rng(16);
    Matrix x;
    Vector y;
    for (int i = 0; i < 10; ++i) {
        x.append_row(Vector{rng.normal(), rng.normal()});
        y.push_back(rng.normal());
    }
    EXPECT_DOUBLE_EQ(nig_update(NIGPosterior::standard(2, 1.0, 1.0, 1.0), x, y).a, 6.0);
}

TEST(NigUpdate, HandEvaluatedOneDimensionalExample) {
    const NIGPosterior prior{{0.0}, Matrix{{1.0}}, 2.0, 3.0, false};
    const auto post = nig_update(prior, Matrix{{1.0}}, Vector{2.0});
    EXPECT_NEAR(post.mu[0], 1.0, 1e-14);
    EXPECT_NEAR(post.sigma(0, 0), 0.5, 1e-14);
    EXPECT_NEAR(post.b, 3.0 + 1.0, 1e-14);
    EXPECT_DOUBLE_EQ(post.a, 2.5);
}

TEST(NigUpdate, BatchEqualsSequential) {
    RngStream rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t d = 1 + rep % 5, n = 5 + rep;
        NIGPosterior prior = NIGPosterior::standard(d, 1.5, 2.0, 1.0);
        for (auto& m : prior.mu) m = rng.normal();
        Matrix x;
        Vector y;
        for (std::size_t i = 0; i < n; ++i) {
            Vector r(d);
            for (auto& v : r) v = rng.normal();
            x.append_row(r);
            y.push_back(rng.normal(1.0, 2.0));
        }
        const auto batch = nig_update(prior, x, y);
        NIGPosterior seq = prior;
        for (std::size_t i = 0; i < n; ++i) {
            Matrix row;
            row.append_row(x.row(i));
            seq = nig_update(seq, row, Vector{y[i]});
        }
        for (std::size_t j = 0; j < d; ++j) EXPECT_NEAR(batch.mu[j], seq.mu[j], 1e-10);
        EXPECT_LE(max_abs_diff(batch.sigma, seq.sigma), 1e-10);
        EXPECT_NEAR(batch.a, seq.a, 1e-10);
        EXPECT_NEAR(batch.b, seq.b, 1e-10);
    }
}

TEST(NigUpdate, OneDimensionalPosteriorMatchesNumericalIntegration) {
    const NIGPosterior prior{{0.5}, Matrix{{2.0}}, 2.0, 1.5, false};
    const Vector xs{1.0, 0.5, -1.0, 2.0}, ys{1.2, 0.1, -0.9, 2.5};
    Matrix x;
    for (double v : xs) x.append_row(Vector{v});
    const auto post = nig_update(prior, x, ys);

    const auto oracle = nig_oracle::integrate(0.5, 2.0, 2.0, 1.5, xs, ys);
    EXPECT_NEAR(post.mu[0], oracle.beta_mean, 1e-4);
    EXPECT_NEAR(post.b / (post.a - 1.0), oracle.s_mean, 1e-3);
}

TEST(NigUpdate, NonPositiveDefinitePriorIsParameterError) {
    const NIGPosterior bad{{0.0, 0.0}, Matrix{{1.0, 2.0}, {2.0, 1.0}}, 1.0, 1.0, false};
    EXPECT_THROW(nig_update(bad, Matrix{{1.0, 0.0}}, Vector{1.0}), ParameterError);
    const NIGPosterior neg{{0.0}, Matrix{{1.0}}, -1.0, 1.0, false};
    EXPECT_THROW(nig_update(neg, Matrix{{1.0}}, Vector{1.0}), ParameterError);
}

TEST(NigTs, ExactMeanModeIsDeterministicArgmax) {
    NIGPosterior p{{0.3, 1.0, -0.5}, Matrix::identity(3, 10.0), 2.0, 2.0, true};
    RngStream rng(18);
    const std::vector<Vector> arms{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int i = 0; i < 100; ++i) EXPECT_EQ(nig_ts_select(p, arms, rng), 1u);
}

TEST(NigTs, SymmetricPosteriorSplitsEvenly) {
    const auto p = NIGPosterior::standard(2, 1.0, 3.0, 2.0);
    RngStream rng(19);
    std::size_t ones = 0;
    const std::size_t n = 10000;
    for (std::size_t i = 0; i < n; ++i) ones += nig_ts_select(p, {{1.0, 0.0}, {0.0, 1.0}}, rng);
    EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.02);
}

TEST(NigTs, StrongHabituationMakesAgentAlternate) {
    const auto c = bandit_envs::two_arm_habituation(1.0, 1.0, -1.0);
    EXPECT_LT(bandit_envs::repeat_rate(c, bandit_envs::concentrated_posterior(c), 1000, 20), 0.10);
}

TEST(NigTs, NoHabituationAndDominantArmMakesAgentRepeat) {
    const auto c = bandit_envs::two_arm_habituation(1.0, 0.5, 0.0);
    EXPECT_GT(bandit_envs::repeat_rate(c, bandit_envs::concentrated_posterior(c), 1000, 21), 0.90);
}

TEST(NigTsAgent, LearnsToAlternateInTheHabituationTrial) {
    auto c = bandit_envs::two_arm_habituation(1.0, 1.0, -0.5);
    c.days = 1000;
    c.noise_sd = 0.5;
    const auto res = simulate_mrt(
        c, [&] { return std::make_unique<NigTsAgent>(NIGPosterior::standard(c.feature_dim(), 10.0)); }, 1,
        RngStream(22));
    std::size_t repeats = 0;
    for (std::size_t t = 500; t < res.trace.size(); ++t) repeats += res.trace[t].chosen_arm == res.trace[t - 1].chosen_arm;
    EXPECT_LT(static_cast<double>(repeats) / 500.0, 0.10);
}

TEST(NigTsAgent, PosteriorDoesNotDependOnUpdateBatching) {
    RngStream rng(23);
    const auto prior = NIGPosterior::standard(2, 1.0, 1.0, 1.0);
    NigTsAgent agent(prior);
    Matrix x;
    Vector y;
    for (int i = 0; i < 30; ++i) {
        const Vector phi{rng.normal(), rng.normal()};
        const double r = rng.normal();
        agent.update(phi, r);
        x.append_row(phi);
        y.push_back(r);
    }
    const auto batch = nig_update(prior, x, y);
    EXPECT_LE(max_abs_diff(agent.posterior().sigma, batch.sigma), 1e-12);
    EXPECT_NEAR(agent.posterior().b, batch.b, 1e-12);
}

TEST(NigPosterior, JsonRoundTrip) {
    const NIGPosterior p{{0.25, -1.0}, Matrix{{2.0, 0.5}, {0.5, 1.0}}, 3.5, 0.75, true};
    const auto q = NIGPosterior::from_json(nlohmann::json::parse(p.to_json().dump()));
    EXPECT_EQ(q.mu, p.mu);
    EXPECT_EQ(q.sigma, p.sigma);
    EXPECT_EQ(q.a, p.a);
    EXPECT_EQ(q.b, p.b);
    EXPECT_TRUE(q.exact_mean);
}

// ---------------------------------------------------------------- actor-critic

namespace {

// g(x) = 1, reward features (1, a); rewards y = base + advantage·a exactly.
std::vector<ActorCriticRow> constant_context_rows(double base, double advantage, std::size_t n) {
    std::vector<ActorCriticRow> rows;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t a = i % 2;
        rows.push_back({{1.0}, {1.0, 0.0}, {1.0, 1.0}, a, base + advantage * static_cast<double>(a)});
    }
    return rows;
}

}  // namespace

TEST(ActorCritic, EqualArmsGiveZeroPolicyParameters) {
    ActorCriticOptions o;
    o.lagrange = 0.5;
    o.critic_lambda = 0.0;
    const auto st = actor_critic_fit_rows(constant_context_rows(2.0, 0.0, 40), o);
    EXPECT_NEAR(st.theta[0], 0.0, 1e-12);
    EXPECT_NEAR(st.prob_one(Vector{1.0}), 0.5, 1e-12);
    EXPECT_FALSE(st.unbounded);
}

TEST(ActorCritic, MatchesGridSearchOracle) {
    ActorCriticOptions o;
    o.lagrange = 0.1;
    o.critic_lambda = 0.0;
    const auto st = actor_critic_fit_rows(constant_context_rows(0.0, 1.0, 40), o);
    // J(θ) = σ(θ) − 0.1θ² up to a constant.
    double best = -std::numeric_limits<double>::infinity(), arg = 0.0;
    for (int k = 0; k <= 40000; ++k) {
        const double th = -20.0 + 1e-3 * k;
        const double j = 1.0 / (1.0 + std::exp(-th)) - 0.1 * th * th;
        if (j > best) {
            best = j;
            arg = th;
        }
    }
    EXPECT_NEAR(st.theta[0], arg, 1e-3);
    EXPECT_FALSE(st.unbounded);
}

TEST(ActorCritic, UnpenalizedDominanceHitsBoxBound) {
    ActorCriticOptions o;
    o.lagrange = 0.0;
    o.critic_lambda = 0.0;
    const auto st = actor_critic_fit_rows(constant_context_rows(0.0, 1.0, 40), o);
    EXPECT_DOUBLE_EQ(st.theta[0], 20.0);
    EXPECT_TRUE(st.unbounded);
    EXPECT_EQ(st.to_json().at("status"), "UNBOUNDED");
}

TEST(ActorCritic, ViolationFractionCountsClippedContexts) {
    RngStream rng(24);
    std::vector<ActorCriticRow> rows;
    for (int i = 0; i < 400; ++i) {
        const double x = rng.normal();
        const std::size_t a = rng.uniform_index(2);
        rows.push_back({{1.0, x}, {1.0, x, 0.0, 0.0}, {0.0, 0.0, 1.0, x}, a, (a == 1 ? x : -x) + 0.3 * rng.normal()});
    }
    ActorCriticOptions o;
    o.lagrange = 0.05;
    o.pi_min = 0.2;
    const auto st = actor_critic_fit_rows(rows, o);
    std::size_t bad = 0;
    for (const auto& r : rows) {
        const double p = 1.0 / (1.0 + std::exp(-(st.theta[0] + st.theta[1] * r.g[1])));
        bad += p < 0.2 || p > 0.8;
    }
    EXPECT_DOUBLE_EQ(st.violation_fraction, bad / 400.0);
    EXPECT_GT(st.theta[1], 0.0);
    EXPECT_EQ(st.chance_constraint_met(), st.violation_fraction <= o.alpha_cc);
}

TEST(ActorCritic, NonBinaryActionIsSchemaError) {
    auto rows = constant_context_rows(0.0, 1.0, 4);
    rows[1].action = 2;
    EXPECT_THROW(actor_critic_fit_rows(rows, {}), SchemaError);
    Dataset d(Schema::indefinite({3, 1}), {Trajectory{"u", {StageRecord{{0.0}, 2, 1.0, 0.3}}}});
    EXPECT_THROW(actor_critic_fit(d, FeatureMap{1, true}, ArmFeatureMap{{1, true}, 2}), SchemaError);
}

TEST(ActorCritic, InvalidOptionsAreParameterErrors) {
    const auto rows = constant_context_rows(0.0, 1.0, 4);
    ActorCriticOptions o;
    o.pi_min = 0.6;
    EXPECT_THROW(actor_critic_fit_rows(rows, o), ParameterError);
    o = {};
    o.alpha_cc = 1.0;
    EXPECT_THROW(actor_critic_fit_rows(rows, o), ParameterError);
    o = {};
    o.lagrange = -1.0;
    EXPECT_THROW(actor_critic_fit_rows(rows, o), ParameterError);
}

TEST(ActorCriticAgent, RunsInTheTrialWithBurnIn) {
    auto c = bandit_envs::two_arm_habituation(0.0, 1.0, 0.0);
    c.days = 200;
    c.burn_in_days = 20;
    ActorCriticAgentOptions o;
    o.fit.lagrange = 0.01;
    const auto res = simulate_mrt(c, [&] { return std::make_unique<ActorCriticAgent>(o); }, 1, RngStream(25));
    std::size_t best = 0;
    for (std::size_t t = 100; t < 200; ++t) best += res.trace[t].chosen_arm == 1;
    EXPECT_GT(best, 80u);
    for (const auto& r : res.data[0].records) EXPECT_GT(r.behavior_prob, 0.0);
}

// ---------------------------------------------------------------- regret

TEST(ImmediateRegret, ExamplesAndShiftInvariance) {
    EXPECT_DOUBLE_EQ(immediate_regret(Vector{1.0, 0.4}, 0), 0.0);
    EXPECT_NEAR(immediate_regret(Vector{1.0, 0.4}, 1), 0.6, 1e-15);
    EXPECT_NEAR(immediate_regret(Vector{11.0, 10.4}, 1), 0.6, 1e-12);
}

TEST(BanditRegret, LinearAgentsBeatUniformByFiveTimes) {
    std::size_t ucb_ok = 0, ts_ok = 0;
    std::vector<double> ucb_mean(10, 0.0), ts_mean(10, 0.0);
    for (std::uint64_t rep = 0; rep < 20; ++rep) {
        const auto r = bandit_envs::regret_replication(1000 + rep);
        ucb_ok += r.linucb <= 0.2 * r.uniform;
        ts_ok += r.lints <= 0.2 * r.uniform;
        for (std::size_t k = 0; k < 10; ++k) {
            ucb_mean[k] += r.linucb_checkpoints[k] / 20.0;
            ts_mean[k] += r.lints_checkpoints[k] / 20.0;
        }
    }
    EXPECT_GE(ucb_ok, 19u);
    EXPECT_GE(ts_ok, 19u);
    // cum_regret(T)/√(T log T) non-increasing over T = 1000..10000.
    for (std::size_t k = 1; k < 10; ++k) {
        const double t0 = 1000.0 * static_cast<double>(k), t1 = t0 + 1000.0;
        auto rate = [](double reg, double t) { return reg / std::sqrt(t * std::log(t)); };
        EXPECT_LE(rate(ucb_mean[k], t1), rate(ucb_mean[k - 1], t0)) << k;
        EXPECT_LE(rate(ts_mean[k], t1), rate(ts_mean[k - 1], t0)) << k;
    }
}
