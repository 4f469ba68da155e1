#pragma once

#include <cstddef>

#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

namespace detail {

/// Shared burn-in bookkeeping: uniform choice for the first `burn_in` selects.
class BurnIn {
  public:
    explicit BurnIn(std::size_t steps) : steps_(steps) {}
    bool active() const noexcept { return seen_ < steps_; }
    void tick() noexcept { ++seen_; }
    std::size_t seen() const noexcept { return seen_; }

  private:
    std::size_t steps_;
    std::size_t seen_ = 0;
};

inline Selection uniform_selection(std::size_t arms, RngStream& rng) {
    return {rng.uniform_index(arms), 1.0 / static_cast<double>(arms)};
}

}  // namespace detail

}  // namespace seqpolicy
