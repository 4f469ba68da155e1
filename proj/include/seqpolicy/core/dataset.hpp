#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// Reward slot. std::nullopt is the MISSING sentinel; consumers must either
/// reject it or apply an explicit imputation rule.
using Reward = std::optional<double>;
inline constexpr std::nullopt_t kMissing = std::nullopt;

/// One decision point: context X_t, action A_t, proximal reward Y_{t+1} and
/// the probability the generating policy gave to A_t.
struct StageRecord {
    Vector state;
    std::size_t action = 0;
    Reward reward;
    double behavior_prob = 1.0;

    friend bool operator==(const StageRecord&, const StageRecord&) = default;
};

struct Trajectory {
    std::string unit_id;
    std::vector<StageRecord> records;

    std::size_t length() const noexcept { return records.size(); }
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

enum class HorizonKind { Fixed, Indefinite };

struct StageSchema {
    std::size_t arity = 2;
    std::size_t state_dim = 0;
    friend bool operator==(const StageSchema&, const StageSchema&) = default;
};

/// Per-stage action arity and state dimension. A fixed-horizon schema has one
/// entry per stage; an indefinite-horizon schema has a single entry that
/// applies at every step.
class Schema {
  public:
    Schema() = default;

    static Schema fixed(std::vector<StageSchema> stages) {
        if (stages.empty()) throw SchemaError("fixed-horizon schema needs at least one stage");
        return Schema(HorizonKind::Fixed, std::move(stages));
    }
    static Schema indefinite(StageSchema stage) { return Schema(HorizonKind::Indefinite, {stage}); }

    HorizonKind horizon() const noexcept { return kind_; }
    bool is_fixed() const noexcept { return kind_ == HorizonKind::Fixed; }
    /// Horizon T for fixed schemas.
    std::size_t stages() const noexcept { return stages_.size(); }

    const StageSchema& at(std::size_t t) const {
        if (stages_.empty()) throw SchemaError("empty schema");
        if (is_fixed() && t >= stages_.size())
            throw IndexError("stage " + std::to_string(t) + " beyond fixed horizon " +
                             std::to_string(stages_.size()));
        return stages_[std::min(t, stages_.size() - 1)];
    }
    std::size_t arity(std::size_t t) const { return at(t).arity; }
    std::size_t state_dim(std::size_t t) const { return at(t).state_dim; }
    std::size_t max_state_dim() const noexcept {
        std::size_t m = 0;
        for (const auto& s : stages_) m = std::max(m, s.state_dim);
        return m;
    }
    const std::vector<StageSchema>& stage_list() const noexcept { return stages_; }

    friend bool operator==(const Schema&, const Schema&) = default;

  private:
    Schema(HorizonKind kind, std::vector<StageSchema> stages) : kind_(kind), stages_(std::move(stages)) {
        for (const auto& s : stages_)
            if (s.arity == 0) throw SchemaError("stage arity must be positive");
    }

    HorizonKind kind_ = HorizonKind::Fixed;
    std::vector<StageSchema> stages_;
};

inline void validate_record(const StageRecord& r, const Schema& schema, std::size_t t,
                            const std::string& where) {
    const auto& s = schema.at(t);
    if (r.state.size() != s.state_dim)
        throw SchemaError(where + ": state length " + std::to_string(r.state.size()) +
                          " != schema dimension " + std::to_string(s.state_dim));
    if (r.action >= s.arity)
        throw SchemaError(where + ": action " + std::to_string(r.action) + " >= arity " +
                          std::to_string(s.arity));
    if (!(r.behavior_prob > 0.0 && r.behavior_prob <= 1.0))
        throw SchemaError(where + ": behavior_prob " + std::to_string(r.behavior_prob) +
                          " outside (0,1]");
}

/// Immutable collection of trajectories that all conform to one schema.
class Dataset {
  public:
    Dataset(Schema schema, std::vector<Trajectory> trajectories)
        : schema_(std::move(schema)), trajectories_(std::move(trajectories)) {
        if (trajectories_.empty()) throw SchemaError("dataset needs at least one trajectory");
        for (std::size_t i = 0; i < trajectories_.size(); ++i) {
            const auto& tr = trajectories_[i];
            const std::string where = "trajectory '" + tr.unit_id + "'";
            if (tr.records.empty()) throw SchemaError(where + " is empty");
            if (schema_.is_fixed() && tr.records.size() != schema_.stages())
                throw SchemaError(where + " has length " + std::to_string(tr.records.size()) +
                                  ", fixed horizon is " + std::to_string(schema_.stages()));
            for (std::size_t t = 0; t < tr.records.size(); ++t)
                validate_record(tr.records[t], schema_, t, where + " stage " + std::to_string(t));
        }
    }

    const Schema& schema() const noexcept { return schema_; }
    const std::vector<Trajectory>& trajectories() const noexcept { return trajectories_; }
    std::size_t size() const noexcept { return trajectories_.size(); }
    const Trajectory& operator[](std::size_t i) const { return trajectories_.at(i); }
    std::size_t horizon() const noexcept { return schema_.stages(); }

    bool has_missing() const noexcept {
        for (const auto& tr : trajectories_)
            for (const auto& r : tr.records)
                if (!r.reward) return true;
        return false;
    }

    /// Throws unless every trajectory has the fixed horizon and no MISSING reward.
    void require_complete(const std::string& consumer) const {
        if (has_missing())
            throw MissingRewardError(consumer + ": dataset has MISSING rewards; impute before fitting");
    }

    friend bool operator==(const Dataset&, const Dataset&) = default;

  private:
    Schema schema_;
    std::vector<Trajectory> trajectories_;
};

/// Argmax with the toolkit-wide tie rule: lowest index wins.
inline std::size_t argmax_lowest(std::span<const double> v) {
    if (v.empty()) throw SchemaError("argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return best;
}

}  // namespace seqpolicy
