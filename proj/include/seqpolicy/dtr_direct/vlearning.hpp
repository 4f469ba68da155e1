#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/features.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/lu.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// Linear value model V(x; θ) = φ(x)ᵀθ fitted from the importance-weighted
/// Bellman estimating equation Λ̂(θ) = b − Aθ with
///   A = P_N[Σ_t w_t φ(X_t)(φ(X_t) − γφ(X_{t+1}))ᵀ],  b = P_N[Σ_t w_t Y_{t+1} φ(X_t)],
/// w_t = d(A_t|X_t)/π_t.
struct VLearnModel {
    FeatureMap features;
    Vector theta;
    double gamma = 0.9;
    double lambda = 0.0;
    Matrix weighting;  // Ŵ
    Matrix a;
    Vector b;
    std::size_t transitions = 0;

    double value(std::span<const double> x) const { return dot(features.apply(x), theta); }

    /// Λ̂(θ) at the fitted θ.
    Vector residual() const {
        Vector r = b;
        const Vector at = a * theta;
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= at[i];
        return r;
    }

    nlohmann::json to_json() const {
        return {{"model", "v_learning"},
                {"feature_map", features.name()},
                {"coefficients", theta},
                {"gamma", gamma},
                {"lambda", lambda},
                {"transitions", transitions}};
    }
};

struct VLearnOptions {
    double gamma = 0.9;
    double lambda = 0.0;
    std::optional<Matrix> weighting;  // identity when absent
};

/// Minimizes Λ̂ᵀŴ⁻¹Λ̂ + λ‖θ‖². With λ = 0 and Ŵ = I the system Aθ = b is
/// solved directly. A record's transition needs X_{t+1}, so the last record
/// of each trajectory is used only when γ = 0.
inline VLearnModel vlearn_fit(const Dataset& data, const PolicySpec& target, const FeatureMap& features,
                              const VLearnOptions& opt = {}) {
    if (!(opt.gamma >= 0.0 && opt.gamma < 1.0)) throw ParameterError("V-learning needs gamma in [0,1)");
    if (!(opt.lambda >= 0.0)) throw ParameterError("V-learning penalty must be >= 0");
    data.require_complete("vlearn_fit");
    const std::size_t q = features.dim();

    VLearnModel m;
    m.features = features;
    m.gamma = opt.gamma;
    m.lambda = opt.lambda;
    m.a = Matrix(q, q);
    m.b = Vector(q, 0.0);
    for (const auto& tr : data.trajectories()) {
        const std::size_t usable = opt.gamma == 0.0 ? tr.records.size() : tr.records.size() - 1;
        for (std::size_t t = 0; t < usable; ++t) {
            const auto& r = tr.records[t];
            const double dp = target.action_prob(t, r.state, r.action);
            if (dp == 0.0) continue;
            if (!(r.behavior_prob > 0.0))
                throw PositivityError("behavior probability is 0 for an action the target policy takes");
            const double w = dp / r.behavior_prob;
            const Vector phi = features.apply(r.state);
            Vector diff = phi;
            if (opt.gamma != 0.0) {
                const Vector next = features.apply(tr.records[t + 1].state);
                for (std::size_t j = 0; j < q; ++j) diff[j] -= opt.gamma * next[j];
            }
            for (std::size_t i = 0; i < q; ++i) {
                m.b[i] += w * *r.reward * phi[i];
                for (std::size_t j = 0; j < q; ++j) m.a(i, j) += w * phi[i] * diff[j];
            }
            ++m.transitions;
        }
    }
    if (m.transitions == 0) throw OverlapError("V-learning: no transition carries positive weight");
    const double n = static_cast<double>(data.size());
    m.a *= 1.0 / n;
    for (auto& v : m.b) v /= n;

    m.weighting = opt.weighting ? *opt.weighting : Matrix::identity(q);
    if (m.weighting.rows() != q || !m.weighting.square()) throw SchemaError("weighting matrix has wrong shape");
    const bool identity_weighting = m.weighting == Matrix::identity(q);
    if (opt.lambda == 0.0 && identity_weighting) {
        m.theta = solve_linear(m.a, m.b);
    } else {
        // (AᵀŴ⁻¹A + λI)θ = AᵀŴ⁻¹b.
        const Cholesky wf(SpdMatrix(m.weighting));
        Matrix winv_a(q, q);
        for (std::size_t j = 0; j < q; ++j) {
            Vector col(q);
            for (std::size_t i = 0; i < q; ++i) col[i] = m.a(i, j);
            const Vector s = wf.solve(col);
            for (std::size_t i = 0; i < q; ++i) winv_a(i, j) = s[i];
        }
        const Matrix at = m.a.transpose();
        Matrix lhs = at * winv_a;
        for (std::size_t i = 0; i < q; ++i) lhs(i, i) += opt.lambda;
        // Symmetrize against roundoff before the SPD solve.
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = i + 1; j < q; ++j) lhs(i, j) = lhs(j, i) = 0.5 * (lhs(i, j) + lhs(j, i));
        m.theta = solve_spd(SpdMatrix(lhs), at * wf.solve(m.b));
    }
    return m;
}

/// Mean fitted value over the observed initial states.
inline double mean_initial_value(const VLearnModel& m, const Dataset& data) {
    double s = 0.0;
    for (const auto& tr : data.trajectories()) s += m.value(tr.records[0].state);
    return s / static_cast<double>(data.size());
}

struct VLearnSearchResult {
    std::size_t best = 0;
    Vector scores;
    VLearnModel model;
};

/// Scores each candidate policy by mean_initial_value of its vlearn_fit and
/// returns the best; ties go to the earliest candidate.
inline VLearnSearchResult vlearn_policy_search(const Dataset& data, const std::vector<PolicySpec>& candidates,
                                               const FeatureMap& features, const VLearnOptions& opt = {}) {
    if (candidates.empty()) throw ParameterError("vlearn_policy_search needs at least one candidate");
    VLearnSearchResult out;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        VLearnModel m = vlearn_fit(data, candidates[c], features, opt);
        const double score = mean_initial_value(m, data);
        out.scores.push_back(score);
        if (c == 0 || score > out.scores[out.best]) {
            out.best = c;
            out.model = std::move(m);
        }
    }
    return out;
}

}  // namespace seqpolicy
