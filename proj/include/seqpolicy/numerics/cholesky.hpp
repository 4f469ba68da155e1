#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// Symmetric positive-definite matrix. Symmetry is checked on construction;
/// definiteness is established by the first factorization.
class SpdMatrix {
  public:
    static constexpr double kSymmetryTol = 1e-10;

    SpdMatrix() = default;
    explicit SpdMatrix(Matrix m) : m_(std::move(m)) {
        if (!m_.square()) throw SchemaError("SPD matrix must be square");
        for (std::size_t i = 0; i < m_.rows(); ++i)
            for (std::size_t j = i + 1; j < m_.cols(); ++j) {
                const double scale = 1.0 + std::fmax(std::fabs(m_(i, j)), std::fabs(m_(j, i)));
                if (std::fabs(m_(i, j) - m_(j, i)) > kSymmetryTol * scale)
                    throw SchemaError("matrix is not symmetric at (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
            }
    }

    static SpdMatrix identity(std::size_t n, double scale = 1.0) {
        return SpdMatrix(Matrix::identity(n, scale));
    }

    std::size_t dim() const noexcept { return m_.rows(); }
    const Matrix& matrix() const noexcept { return m_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return m_(i, j); }

  private:
    Matrix m_;
};

/// Lower-triangular Cholesky factor L with A = LLᵀ.
class Cholesky {
  public:
    static constexpr double kRelativePivotTol = 1e-13;

    explicit Cholesky(const Matrix& a) : l_(a.rows(), a.cols()) {
        if (!a.square()) throw SchemaError("Cholesky requires a square matrix");
        const std::size_t n = a.rows();
        for (std::size_t j = 0; j < n; ++j) {
            double d = a(j, j);
            for (std::size_t k = 0; k < j; ++k) d -= l_(j, k) * l_(j, k);
            // A pivot that lost all significant digits relative to its diagonal
            // entry means the matrix is singular to working precision.
            if (!(d > kRelativePivotTol * std::fabs(a(j, j))) || !(d > 0.0) || !std::isfinite(d))
                throw FactorizationError("matrix is not positive definite (pivot " +
                                         std::to_string(j) + " = " + std::to_string(d) + ")");
            const double ljj = std::sqrt(d);
            l_(j, j) = ljj;
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
                l_(i, j) = s / ljj;
            }
        }
    }
    explicit Cholesky(const SpdMatrix& a) : Cholesky(a.matrix()) {}

    std::size_t dim() const noexcept { return l_.rows(); }
    const Matrix& lower() const noexcept { return l_; }

    /// Solves L y = b.
    Vector solve_lower(std::span<const double> b) const {
        check(b);
        Vector y(b.begin(), b.end());
        for (std::size_t i = 0; i < y.size(); ++i) {
            for (std::size_t k = 0; k < i; ++k) y[i] -= l_(i, k) * y[k];
            y[i] /= l_(i, i);
        }
        return y;
    }

    /// Solves Lᵀ x = y.
    Vector solve_upper(std::span<const double> y) const {
        check(y);
        Vector x(y.begin(), y.end());
        for (std::size_t ii = x.size(); ii-- > 0;) {
            for (std::size_t k = ii + 1; k < x.size(); ++k) x[ii] -= l_(k, ii) * x[k];
            x[ii] /= l_(ii, ii);
        }
        return x;
    }

    Vector solve(std::span<const double> b) const { return solve_upper(solve_lower(b)); }

    Matrix inverse() const {
        const std::size_t n = dim();
        Matrix inv(n, n);
        Vector e(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            e.assign(n, 0.0);
            e[j] = 1.0;
            const Vector col = solve(e);
            for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
        }
        // Exact symmetry, so the result can be wrapped as an SpdMatrix.
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double avg = 0.5 * (inv(i, j) + inv(j, i));
                inv(i, j) = avg;
                inv(j, i) = avg;
            }
        return inv;
    }

    /// xᵀA⁻¹x = ‖L⁻¹x‖².
    double inverse_quadratic_form(std::span<const double> x) const {
        const Vector y = solve_lower(x);
        return dot(y, y);
    }

  private:
    void check(std::span<const double> b) const {
        if (b.size() != dim()) throw SchemaError("right-hand side length does not match matrix");
    }
    Matrix l_;
};

/// Solves Ax = b for positive-definite A via Cholesky.
inline Vector solve_spd(const SpdMatrix& a, std::span<const double> b) {
    return Cholesky(a).solve(b);
}

/// Penalized least squares: solves (XᵀX + λI)β = Xᵀy.
inline Vector ridge_fit(const Matrix& x, std::span<const double> y, double lambda) {
    if (x.rows() == 0) throw SchemaError("ridge_fit needs at least one row");
    if (x.rows() != y.size()) throw SchemaError("ridge_fit: design rows and response length differ");
    if (!(lambda >= 0.0)) throw ParameterError("ridge_fit: lambda must be >= 0");
    Matrix g = gram(x);
    for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) += lambda;
    try {
        return Cholesky(g).solve(transpose_times(x, y));
    } catch (const FactorizationError& e) {
        if (lambda == 0.0)
            throw FactorizationError(std::string("singular design with lambda = 0; use lambda > 0 (") +
                                     e.what() + ")");
        throw;
    }
}

}  // namespace seqpolicy
