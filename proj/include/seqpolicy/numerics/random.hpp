#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Stream id for (replication, module tag). Distinct pairs map to distinct
/// generator seeds with overwhelming probability, so parallel replications
/// never share a stream.
inline constexpr std::uint64_t stream_id(std::uint64_t replication, std::string_view tag) noexcept {
    return splitmix64(splitmix64(replication) ^ fnv1a64(tag));
}

/// Seeded random stream. A value type: copying it forks an identical
/// sequence; identical (seed, stream) always reproduces identical draws.
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream), engine_(splitmix64(seed ^ splitmix64(stream + 1))) {}

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// Child stream keyed by a tag and an index (users, replications, ...).
    RngStream split(std::string_view tag, std::uint64_t index = 0) const {
        return RngStream(seed_, splitmix64(stream_ ^ stream_id(index, tag)));
    }

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return normal_(engine_); }
    double normal(double mean, double sd) { return mean + sd * normal(); }
    double gamma(double shape) { return std::gamma_distribution<double>(shape, 1.0)(engine_); }

    /// Index drawn from a probability vector (inverse CDF, lowest index on
    /// boundaries).
    std::size_t categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        for (std::size_t k = 0; k < probs.size(); ++k) {
            acc += probs[k];
            if (u < acc) return k;
        }
        // Round-off: fall back to the last arm with positive mass.
        for (std::size_t k = probs.size(); k-- > 0;)
            if (probs[k] > 0.0) return k;
        throw ParameterError("categorical draw from an all-zero probability vector");
    }

    std::size_t uniform_index(std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

/// mean + scale·L·z for an existing factor L of the covariance.
inline Vector sample_mvn(std::span<const double> mean, const Cholesky& cov_factor, RngStream& rng,
                         double scale = 1.0) {
    const std::size_t d = mean.size();
    if (cov_factor.dim() != d) throw SchemaError("sample_mvn: factor shape does not match mean");
    Vector z(d);
    for (auto& v : z) v = rng.normal();
    const Matrix& l = cov_factor.lower();
    Vector out(mean.begin(), mean.end());
    for (std::size_t i = 0; i < d; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k <= i; ++k) s += l(i, k) * z[k];
        out[i] += scale * s;
    }
    return out;
}

/// mean + L·z with L the Cholesky factor of cov. An all-zero covariance is
/// the degenerate point mass and returns the mean unchanged.
inline Vector sample_mvn(std::span<const double> mean, const Matrix& cov, RngStream& rng) {
    if (cov.rows() != mean.size() || !cov.square())
        throw SchemaError("sample_mvn: covariance shape does not match mean");
    bool zero = true;
    for (double v : cov.data())
        if (v != 0.0) {
            zero = false;
            break;
        }
    if (zero) return Vector(mean.begin(), mean.end());
    const Cholesky chol(SpdMatrix{cov});
    return sample_mvn(mean, chol, rng);
}

/// Draw from IG(a, b) (shape a, scale b): b / Gamma(a, 1).
inline double sample_inverse_gamma(double a, double b, RngStream& rng) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
        throw ParameterError("inverse gamma requires shape > 0 and scale > 0");
    double g = 0.0;
    // Gamma(a,1) underflows to 0 only for tiny shapes; redraw to stay in support.
    while (!(g > 0.0)) g = rng.gamma(a);
    return b / g;
}

}  // namespace seqpolicy
