#pragma once

#include <cstddef>
#include <string>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/errors.hpp"

namespace seqpolicy {

/// Σ_{τ≥t} γ^{τ-t} Y_{τ+1}, with 0^0 = 1 so γ = 0 gives the immediate reward.
inline double discounted_return(const Trajectory& traj, std::size_t t, double gamma) {
    if (t >= traj.records.size())
        throw IndexError("stage " + std::to_string(t) + " beyond trajectory length " +
                         std::to_string(traj.records.size()));
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0,1]");
    double total = 0.0;
    double discount = 1.0;
    for (std::size_t tau = t; tau < traj.records.size(); ++tau) {
        const auto& r = traj.records[tau].reward;
        if (!r)
            throw MissingRewardError("MISSING reward at stage " + std::to_string(tau) +
                                     "; impute before computing returns");
        total += discount * *r;
        discount *= gamma;
    }
    return total;
}

}  // namespace seqpolicy
