#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "seqpolicy/bandits/common.hpp"
#include "seqpolicy/core/agent.hpp"
#include "seqpolicy/core/dataset.hpp"
#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/json.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

namespace seqpolicy {

/// Normal-inverse-gamma belief over (β, σ²):
///   σ² ~ IG(a, b),  β | σ² ~ N(mu, σ²·sigma).
struct NIGPosterior {
    Vector mu;
    Matrix sigma;
    double a = 1.0;
    double b = 1.0;
    // Exploitation limit: nig_ts_select returns argmax fᵀmu without drawing.
    bool exact_mean = false;

    static NIGPosterior standard(std::size_t dim, double prior_var = 1.0, double a = 1.0, double b = 1.0) {
        return {Vector(dim, 0.0), Matrix::identity(dim, prior_var), a, b, false};
    }

    std::size_t dim() const noexcept { return mu.size(); }

    void validate() const {
        if (mu.empty()) throw ParameterError("NIG mean must have at least one entry");
        if (!sigma.square() || sigma.rows() != mu.size()) throw SchemaError("NIG covariance shape does not match mean");
        if (!(a > 0.0) || !(b > 0.0)) throw ParameterError("NIG shape and scale must be > 0");
    }

    nlohmann::json to_json() const {
        return {{"mu", mu}, {"Sigma", matrix_to_json(sigma)}, {"a", a}, {"b", b}, {"exact_mean", exact_mean}};
    }
    static NIGPosterior from_json(const nlohmann::json& j) {
        NIGPosterior p{j.at("mu").get<Vector>(), matrix_from_json(j.at("Sigma")), j.at("a").get<double>(),
                       j.at("b").get<double>(), j.value("exact_mean", false)};
        p.validate();
        return p;
    }
};

namespace detail {

inline Cholesky factor_prior(const Matrix& sigma) {
    try {
        return Cholesky(SpdMatrix(sigma));
    } catch (const Error& e) {
        throw ParameterError(std::string("NIG covariance is not positive definite: ") + e.what());
    }
}

}  // namespace detail

/// Data summary sufficient for the conjugate update.
struct NigSuffStats {
    Matrix xtx;
    Vector xty;
    double yty = 0.0;
    std::size_t n = 0;

    static NigSuffStats empty(std::size_t dim) { return {Matrix(dim, dim), Vector(dim, 0.0), 0.0, 0}; }

    void add(std::span<const double> phi, double y) {
        add_outer(xtx, phi);
        for (std::size_t i = 0; i < phi.size(); ++i) xty[i] += phi[i] * y;
        yty += y * y;
        ++n;
    }
};

/// Posterior from the prior and a data summary:
///   Σ* = (Σ⁻¹ + XᵀX)⁻¹,  μ* = Σ*(Σ⁻¹μ + Xᵀy),  a* = a + n/2,
///   b* = b + ½(μᵀΣ⁻¹μ + yᵀy − μ*ᵀΣ*⁻¹μ*).
inline NIGPosterior nig_update(const NIGPosterior& prior, const NigSuffStats& s) {
    prior.validate();
    if (s.n == 0) return prior;
    const std::size_t d = prior.dim();
    if (s.xtx.rows() != d || !s.xtx.square() || s.xty.size() != d)
        throw SchemaError("NIG update: data summary does not match the prior dimension");

    const Cholesky prior_f = detail::factor_prior(prior.sigma);
    Matrix precision = prior_f.inverse();
    const Vector prior_eta = precision * std::span<const double>(prior.mu);  // Σ⁻¹μ
    const double prior_quad = dot(prior.mu, prior_eta);

    precision += s.xtx;
    Vector eta = s.xty;
    for (std::size_t i = 0; i < d; ++i) eta[i] += prior_eta[i];

    const Cholesky post_f(precision);
    NIGPosterior post;
    post.mu = post_f.solve(eta);
    post.sigma = post_f.inverse();
    post.a = prior.a + 0.5 * static_cast<double>(s.n);
    // μ*ᵀΣ*⁻¹μ* = μ*ᵀη.
    post.b = prior.b + 0.5 * (prior_quad + s.yty - dot(post.mu, eta));
    post.exact_mean = prior.exact_mean;
    if (!(post.b > 0.0))
        throw ConsistencyError("NIG update produced b* = " + std::to_string(post.b) + " <= 0");
    return post;
}

/// Update with n rows of X (features of the chosen arms) and rewards y.
inline NIGPosterior nig_update(const NIGPosterior& prior, const Matrix& x, std::span<const double> y) {
    prior.validate();
    if (x.rows() != y.size()) throw SchemaError("NIG update: design rows and reward count differ");
    if (y.empty()) return prior;
    if (x.cols() != prior.dim()) throw SchemaError("NIG update: design columns do not match the prior");
    NigSuffStats s{gram(x), transpose_times(x, y), dot(y, y), y.size()};
    return nig_update(prior, s);
}

/// Posterior covariance factored once, for repeated Thompson draws.
class NigSampler {
  public:
    explicit NigSampler(const NIGPosterior& post) : post_(post) {
        post_.validate();
        if (!post_.exact_mean) factor_.emplace(detail::factor_prior(post_.sigma));
    }

    /// σ̃² ~ IG(a, b), β̃ ~ N(μ, σ̃²Σ); μ itself in exact-mean mode.
    Vector draw(RngStream& rng) const {
        if (post_.exact_mean) return post_.mu;
        const double s2 = sample_inverse_gamma(post_.a, post_.b, rng);
        return sample_mvn(post_.mu, *factor_, rng, std::sqrt(s2));
    }

    std::size_t select(const std::vector<Vector>& arms, RngStream& rng) const {
        if (arms.empty()) throw SchemaError("no arms to choose from");
        for (const auto& f : arms)
            if (f.size() != post_.dim()) throw SchemaError("arm features do not match the NIG dimension");
        const Vector beta = draw(rng);
        Vector scores(arms.size());
        for (std::size_t a = 0; a < arms.size(); ++a) scores[a] = dot(arms[a], beta);
        return argmax_lowest(scores);
    }

  private:
    NIGPosterior post_;
    std::optional<Cholesky> factor_;
};

/// argmax_a f_aᵀβ̃ for one posterior draw (lowest index on ties).
inline std::size_t nig_ts_select(const NIGPosterior& post, const std::vector<Vector>& arms, RngStream& rng) {
    return NigSampler(post).select(arms, rng);
}

struct NigTsOptions {
    std::size_t burn_in = 0;
    std::size_t propensity_draws = 100;
};

/// Thompson sampling on the conjugate model. The posterior is recomputed from
/// the prior and the running data summary, so it does not depend on how the
/// history was batched.
class NigTsAgent final : public Agent {
  public:
    NigTsAgent(NIGPosterior prior, NigTsOptions opt = {})
        : prior_(std::move(prior)), post_(prior_), opt_(opt), burn_(opt.burn_in) {
        prior_.validate();
        stats_ = NigSuffStats::empty(prior_.dim());
        detail::factor_prior(prior_.sigma);
    }

    std::string name() const override { return "nig_ts"; }

    Selection select(const DecisionContext& ctx, RngStream& rng) override {
        const bool burning = burn_.active();
        burn_.tick();
        if (burning) return detail::uniform_selection(ctx.arm_features.size(), rng);
        const NigSampler sampler(post_);
        const std::size_t arm = sampler.select(ctx.arm_features, rng);
        double prob = 1.0;
        if (opt_.propensity_draws > 0 && !post_.exact_mean) {
            std::size_t hits = 0;
            for (std::size_t k = 0; k < opt_.propensity_draws; ++k) hits += sampler.select(ctx.arm_features, rng) == arm;
            prob = static_cast<double>(hits + 1) / static_cast<double>(opt_.propensity_draws + 1);
        }
        return {arm, prob};
    }

    void update(std::span<const double> phi, double reward) override {
        if (phi.size() != prior_.dim()) throw SchemaError("feature length does not match the NIG dimension");
        stats_.add(phi, reward);
        post_ = nig_update(prior_, stats_);
    }

    nlohmann::json snapshot() const override {
        return {{"agent", name()}, {"steps", burn_.seen()}, {"observations", stats_.n}, {"posterior", post_.to_json()}};
    }

    const NIGPosterior& posterior() const noexcept { return post_; }

  private:
    NIGPosterior prior_;
    NIGPosterior post_;
    NigTsOptions opt_;
    detail::BurnIn burn_;
    NigSuffStats stats_;
};

}  // namespace seqpolicy
