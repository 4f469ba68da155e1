// Two-state chain: score three stationary policies with V-learning from
// logged uniform-random data and compare against exact discounted values.

#include <cstdio>
#include <string>
#include <vector>

#include "seqpolicy/seqpolicy.hpp"

using namespace seqpolicy;

int main() {
    ChainConfig chain;
    chain.states = 2;
    chain.arms = 2;
    // Arm 1 pays now in state 0 but drifts to the poor state 1.
    chain.transition = {{{0.9, 0.1}, {0.3, 0.7}}, {{0.6, 0.4}, {0.1, 0.9}}};
    chain.reward_mean = {{1.0, 1.5}, {0.0, 0.2}};
    chain.reward_sd = 0.5;
    chain.initial = {0.5, 0.5};
    const double gamma = 0.8;

    const Dataset logged = simulate_chain(chain, PolicySpec::uniform(2), 2000, 30, RngStream(11));

    TabularRule switching{2, 2, {{{1, 0}, 0}, {{0, 1}, 1}}, 0};
    const std::vector<std::string> names{"always arm 0", "always arm 1", "0 in state 0, 1 in state 1"};
    const std::vector<PolicySpec> candidates{PolicySpec::constant(2, 0), PolicySpec::constant(2, 1),
                                             PolicySpec(std::vector<StageRule>{switching})};

    const FeatureMap onehot{2, false};
    const auto search = vlearn_policy_search(logged, candidates, onehot, {gamma, 0.0, std::nullopt});
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const Vector exact = chain.policy_value(candidates[c], gamma);
        std::printf("%-28s estimated %.3f   exact %.3f\n", names[c].c_str(), search.scores[c],
                    0.5 * (exact[0] + exact[1]));
    }
    std::printf("V-learning picks: %s\n", names[search.best].c_str());
}
