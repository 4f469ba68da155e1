#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// State feature map φ(x): x itself ("linear"), (1, x) ("affine"), or the
/// single constant 1 ("constant", ignores x).
struct FeatureMap {
    std::size_t input_dim = 0;
    bool intercept = true;
    bool constant = false;

    std::size_t dim() const noexcept { return constant ? 1 : input_dim + (intercept ? 1 : 0); }
    std::string name() const {
        if (constant) return "constant";
        return intercept ? "affine" : "linear";
    }
    /// Index of the first slope coefficient (coefficients before it are not penalized).
    std::size_t slope_offset() const noexcept { return constant ? 1 : (intercept ? 1 : 0); }

    static FeatureMap from_name(const std::string& name, std::size_t input_dim) {
        if (name == "affine") return {input_dim, true};
        if (name == "linear") return {input_dim, false};
        if (name == "constant") return {input_dim, true, true};
        throw ParameterError("unknown feature map '" + name + "'");
    }

    Vector apply(std::span<const double> x) const {
        if (x.size() != input_dim)
            throw SchemaError("feature map expects " + std::to_string(input_dim) + " inputs, got " +
                              std::to_string(x.size()));
        if (constant) return Vector{1.0};
        Vector out;
        out.reserve(dim());
        if (intercept) out.push_back(1.0);
        out.insert(out.end(), x.begin(), x.end());
        return out;
    }

    friend bool operator==(const FeatureMap&, const FeatureMap&) = default;
};

/// Action-dependent map φ(x, a) = e_a ⊗ φ(x): each arm owns a block of
/// coefficients, so the map is saturated when x one-hot encodes a finite
/// history space.
struct ArmFeatureMap {
    FeatureMap state;
    std::size_t arms = 2;

    std::size_t dim() const noexcept { return arms * state.dim(); }
    std::string name() const { return "stacked_" + state.name(); }

    static ArmFeatureMap from_name(const std::string& name, std::size_t input_dim, std::size_t arms) {
        const std::string prefix = "stacked_";
        if (name.rfind(prefix, 0) != 0) throw ParameterError("unknown arm feature map '" + name + "'");
        return {FeatureMap::from_name(name.substr(prefix.size()), input_dim), arms};
    }

    Vector apply(std::span<const double> x, std::size_t arm) const {
        if (arm >= arms)
            throw IndexError("arm " + std::to_string(arm) + " out of range for " +
                             std::to_string(arms) + " arms");
        const Vector base = state.apply(x);
        Vector out(dim(), 0.0);
        std::copy(base.begin(), base.end(), out.begin() + static_cast<std::ptrdiff_t>(arm * base.size()));
        return out;
    }

    /// φ(x,a)ᵀθ without materializing the padded vector.
    double evaluate(std::span<const double> x, std::size_t arm, std::span<const double> theta) const {
        if (theta.size() != dim()) throw SchemaError("coefficient length does not match feature map");
        if (arm >= arms) throw IndexError("arm out of range");
        const Vector base = state.apply(x);
        return dot(base, theta.subspan(arm * base.size(), base.size()));
    }

    friend bool operator==(const ArmFeatureMap&, const ArmFeatureMap&) = default;
};

}  // namespace seqpolicy
