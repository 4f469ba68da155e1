// Daily messages whose effect wears off when repeated: Thompson sampling
// with a habituation-aware reward model against uniform randomization.

#include <cstdio>
#include <memory>

#include "seqpolicy/seqpolicy.hpp"

using namespace seqpolicy;

int main() {
    MrtConfig env;
    env.arms = 2;
    env.days = 180;
    env.arm_intercept = {0.4, 0.8};
    env.habituation_coef = {-0.1, -0.5};
    env.noise_sd = 0.5;
    env.missing_prob = 0.1;
    env.missing_update = MissingUpdate::Locf;

    const std::size_t users = 20;
    const RngStream rng(3);
    const std::size_t d = env.feature_dim();

    const auto uniform = simulate_mrt(env, [&] { return std::make_unique<PolicyAgent>(PolicySpec::uniform(2)); },
                                      users, rng);
    const auto ts = simulate_mrt(
        env, [&] { return std::make_unique<NigTsAgent>(NIGPosterior::standard(d, 1.0, 1.0, 1.0), NigTsOptions{7, 50}); },
        users, rng);

    auto final_regret = [&](const MrtResult& r) {
        double s = 0.0;
        for (const auto& row : r.trace)
            if (row.day + 1 == env.days) s += row.cum_regret;
        return s / static_cast<double>(users);
    };
    std::printf("mean cumulative regret after %zu days\n", env.days);
    std::printf("  uniform        %.2f\n", final_regret(uniform));
    std::printf("  NIG Thompson   %.2f\n", final_regret(ts));
}
