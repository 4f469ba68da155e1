#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// Days since each arm was last played, capped at z_max. New contexts start
/// fully rested (every entry = z_max).
struct RecoveryContext {
    std::vector<int> z;

    static RecoveryContext rested(std::size_t arms, int z_max) {
        if (z_max < 1) throw ParameterError("Z_max must be >= 1");
        return {std::vector<int>(arms, z_max)};
    }

    std::size_t arms() const noexcept { return z.size(); }

    /// Habituation context z̄ = z_max - z; larger means more habituated.
    Vector habituation(int z_max) const {
        Vector out(z.size());
        for (std::size_t j = 0; j < z.size(); ++j) out[j] = static_cast<double>(z_max - z[j]);
        return out;
    }

    friend bool operator==(const RecoveryContext&, const RecoveryContext&) = default;
};

/// Chosen arm resets to 0; every other arm ages by one day, saturating at z_max.
inline RecoveryContext update_recovery_context(const RecoveryContext& ctx, std::size_t action, int z_max) {
    if (action >= ctx.z.size())
        throw IndexError("action " + std::to_string(action) + " out of range for " +
                         std::to_string(ctx.z.size()) + " arms");
    RecoveryContext next = ctx;
    for (std::size_t j = 0; j < next.z.size(); ++j)
        next.z[j] = j == action ? 0 : std::min(z_max, next.z[j] + 1);
    return next;
}

}  // namespace seqpolicy
