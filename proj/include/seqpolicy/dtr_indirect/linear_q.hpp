#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/core/features.hpp"
#include "seqpolicy/core/policy.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// Per-stage Q_t(h, a; θ_t) = φ_t(h, a)ᵀθ_t.
struct LinearQModel {
    std::vector<ArmFeatureMap> maps;
    std::vector<Vector> theta;

    std::size_t stages() const noexcept { return theta.size(); }

    Vector q_values(std::size_t t, std::span<const double> h) const {
        const auto& m = maps.at(t);
        Vector q(m.arms);
        for (std::size_t a = 0; a < q.size(); ++a) q[a] = m.evaluate(h, a, theta.at(t));
        return q;
    }

    double max_q(std::size_t t, std::span<const double> h) const {
        const Vector q = q_values(t, h);
        return q[argmax_lowest(q)];
    }

    nlohmann::json to_json() const {
        nlohmann::json stages_json = nlohmann::json::array();
        for (std::size_t t = 0; t < theta.size(); ++t)
            stages_json.push_back({{"stage", t},
                                   {"feature_map", maps[t].name()},
                                   {"input_dim", maps[t].state.input_dim},
                                   {"arms", maps[t].arms},
                                   {"coefficients", theta[t]}});
        return {{"model", "linear_q"}, {"stages", stages_json}};
    }

    static LinearQModel from_json(const nlohmann::json& j) {
        LinearQModel m;
        try {
            for (const auto& s : j.at("stages")) {
                m.maps.push_back(ArmFeatureMap::from_name(s.at("feature_map").get<std::string>(),
                                                          s.at("input_dim").get<std::size_t>(),
                                                          s.at("arms").get<std::size_t>()));
                m.theta.push_back(s.at("coefficients").get<Vector>());
                if (m.theta.back().size() != m.maps.back().dim())
                    throw SchemaError("coefficient length does not match feature map at stage " +
                                      std::to_string(m.theta.size() - 1));
            }
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError(std::string("malformed linear Q model: ") + e.what());
        }
        return m;
    }
};

/// Backward-induction Q-learning with linear approximation. Stage T-1
/// regresses Y_T on φ; earlier stages regress Y_{t+1} + γ max_a Q̂_{t+1}.
inline LinearQModel fit_q_backward(const Dataset& data, const std::vector<ArmFeatureMap>& maps,
                                   double ridge_lambda = 1e-6, double gamma = 1.0) {
    if (!data.schema().is_fixed()) throw SchemaError("fit_q_backward needs a fixed-horizon dataset");
    data.require_complete("fit_q_backward");
    const std::size_t horizon = data.horizon();
    if (maps.size() != horizon)
        throw SchemaError("fit_q_backward: expected " + std::to_string(horizon) + " feature maps, got " +
                          std::to_string(maps.size()));
    if (!(gamma >= 0.0 && gamma <= 1.0)) throw ParameterError("gamma must lie in [0,1]");
    for (std::size_t t = 0; t < horizon; ++t) {
        if (maps[t].arms != data.schema().arity(t))
            throw SchemaError("feature map arms differ from schema arity at stage " + std::to_string(t));
        if (maps[t].state.input_dim != data.schema().state_dim(t))
            throw SchemaError("feature map input differs from schema state dimension at stage " +
                              std::to_string(t));
    }

    LinearQModel model;
    model.maps = maps;
    model.theta.assign(horizon, Vector{});
    const std::size_t n = data.size();
    for (std::size_t t = horizon; t-- > 0;) {
        Matrix x(0, maps[t].dim());
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto& tr = data[i];
            const auto& r = tr.records[t];
            x.append_row(maps[t].apply(r.state, r.action));
            y[i] = *r.reward;
            if (t + 1 < horizon) y[i] += gamma * model.max_q(t + 1, tr.records[t + 1].state);
        }
        model.theta[t] = ridge_fit(x, y, ridge_lambda);
    }
    return model;
}

/// Deterministic regime d̂_t(h) = argmax_a Q_t(h, a; θ̂_t), lowest arm on ties.
inline PolicySpec greedy_policy_from_q(const LinearQModel& model) {
    if (model.theta.empty()) throw SchemaError("greedy_policy_from_q: empty model");
    std::vector<StageRule> rules;
    for (std::size_t t = 0; t < model.stages(); ++t) rules.emplace_back(LinearArgmaxRule{model.maps[t], model.theta[t]});
    return PolicySpec(std::move(rules));
}

}  // namespace seqpolicy
