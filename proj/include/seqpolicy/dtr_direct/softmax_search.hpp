#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/features.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/dtr_direct/value.hpp"
#include "seqpolicy/errors.hpp"

namespace seqpolicy {

struct SoftmaxSearchOptions {
    double lower = -10.0;
    double upper = 10.0;
    double grid_step = 0.1;
    std::size_t coordinate_passes = 2;
    double refine_tol = 1e-4;
    double gamma = 1.0;
};

struct SoftmaxSearchResult {
    SoftmaxRule rule;
    double value = 0.0;
    std::size_t evaluations = 0;

    PolicySpec policy() const { return PolicySpec(rule); }
};

namespace detail {

// IPTW value of a soft-max rule shared across stages, with the features and
// outcomes precomputed.
class SoftmaxObjective {
  public:
    SoftmaxObjective(const Dataset& data, std::size_t arms, const FeatureMap& map, double gamma)
        : arms_(arms), dim_(map.dim()) {
        y_ = trajectory_outcomes(data, gamma);
        for (const auto& tr : data.trajectories()) {
            std::vector<Row> rows;
            for (const auto& r : tr.records) rows.push_back({map.apply(r.state), r.action, r.behavior_prob});
            rows_.push_back(std::move(rows));
        }
    }

    std::size_t free_params() const noexcept { return (arms_ - 1) * dim_; }

    /// ψ with block 0 pinned at zero.
    std::vector<Vector> blocks(std::span<const double> free) const {
        std::vector<Vector> psi(arms_, Vector(dim_, 0.0));
        for (std::size_t k = 1; k < arms_; ++k)
            for (std::size_t j = 0; j < dim_; ++j) psi[k][j] = free[(k - 1) * dim_ + j];
        return psi;
    }

    double operator()(std::span<const double> free) const {
        ++evaluations;
        const auto psi = blocks(free);
        double swy = 0.0, sw = 0.0;
        Vector s(arms_);
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            double w = 1.0;
            for (const auto& row : rows_[i]) {
                for (std::size_t k = 0; k < arms_; ++k) s[k] = -dot(row.phi, psi[k]);
                const double m = *std::max_element(s.begin(), s.end());
                double total = 0.0;
                for (double v : s) total += std::exp(v - m);
                w *= std::exp(s[row.action] - m) / total / row.prob;
            }
            swy += w * y_[i];
            sw += w;
        }
        if (!(sw > 0.0)) return -std::numeric_limits<double>::infinity();
        return swy / sw;
    }

    mutable std::size_t evaluations = 0;

  private:
    struct Row {
        Vector phi;
        std::size_t action;
        double prob;
    };
    std::size_t arms_, dim_;
    Vector y_;
    std::vector<std::vector<Row>> rows_;
};

}  // namespace detail

/// Maximizes the IPTW value over the soft-max class. ψ_0 is fixed at 0 (the
/// class is invariant to a common shift of all blocks). Search: cyclic
/// coordinate passes over a grid on [lower, upper], then pattern search with
/// step halving down to refine_tol.
inline SoftmaxSearchResult policy_search_softmax(const Dataset& data, std::size_t arms, const FeatureMap& map,
                                                 const SoftmaxSearchOptions& opt = {}) {
    if (arms < 2) throw ParameterError("soft-max search needs at least two arms");
    if (!(opt.upper > opt.lower) || !(opt.grid_step > 0.0) || !(opt.refine_tol > 0.0))
        throw ParameterError("soft-max search: invalid grid");
    const std::size_t stages = data.schema().is_fixed() ? data.horizon() : 1;
    for (std::size_t t = 0; t < stages; ++t) {
        if (data.schema().arity(t) != arms) throw SchemaError("soft-max search: arms differ from data arity");
        if (data.schema().state_dim(t) != map.input_dim)
            throw SchemaError("soft-max search: feature map input differs from state dimension");
    }

    const detail::SoftmaxObjective objective(data, arms, map, opt.gamma);
    Vector theta(objective.free_params(), 0.0);
    double best = objective(theta);
    const auto grid_points = static_cast<std::size_t>(std::floor((opt.upper - opt.lower) / opt.grid_step + 1e-9)) + 1;

    for (std::size_t pass = 0; pass < opt.coordinate_passes; ++pass)
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double keep = theta[j];
            double arg = keep;
            for (std::size_t g = 0; g < grid_points; ++g) {
                theta[j] = opt.lower + static_cast<double>(g) * opt.grid_step;
                const double v = objective(theta);
                if (v > best) {
                    best = v;
                    arg = theta[j];
                }
            }
            theta[j] = arg;
        }

    std::size_t rounds = 0;
    for (double step = opt.grid_step / 2; step >= opt.refine_tol && rounds < 100000; ++rounds) {
        bool improved = false;
        for (std::size_t j = 0; j < theta.size(); ++j)
            for (double dir : {1.0, -1.0}) {
                const double keep = theta[j];
                theta[j] = std::clamp(keep + dir * step, opt.lower, opt.upper);
                const double v = objective(theta);
                if (v > best) {
                    best = v;
                    improved = true;
                } else {
                    theta[j] = keep;
                }
            }
        if (!improved) step /= 2;
    }

    return {SoftmaxRule{map, objective.blocks(theta)}, best, objective.evaluations};
}

}  // namespace seqpolicy
