#pragma once

#include <vector>

#include "seqpolicy/core/dataset.hpp"

namespace seqpolicy {

/// Last observation carried forward. A MISSING reward before any observed
/// value becomes 0.
inline Trajectory apply_locf(const Trajectory& traj) {
    Trajectory out = traj;
    double last = 0.0;
    for (auto& r : out.records) {
        if (r.reward)
            last = *r.reward;
        else
            r.reward = last;
    }
    return out;
}

inline Dataset apply_locf(const Dataset& data) {
    std::vector<Trajectory> trs;
    trs.reserve(data.size());
    for (const auto& tr : data.trajectories()) trs.push_back(apply_locf(tr));
    return Dataset(data.schema(), std::move(trs));
}

}  // namespace seqpolicy
