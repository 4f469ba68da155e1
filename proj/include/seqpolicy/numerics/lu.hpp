#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "seqpolicy/errors.hpp"
#include "seqpolicy/numerics/matrix.hpp"

namespace seqpolicy {

/// Solves a square (not necessarily symmetric) system Ax = b by Gaussian
/// elimination with partial pivoting.
inline Vector solve_linear(Matrix a, std::span<const double> rhs) {
    if (!a.square()) throw SchemaError("solve_linear requires a square matrix");
    if (rhs.size() != a.rows()) throw SchemaError("right-hand side length does not match matrix");
    const std::size_t n = a.rows();
    Vector b(rhs.begin(), rhs.end());
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::fmax(scale, std::fabs(a(i, j)));
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t i = c + 1; i < n; ++i)
            if (std::fabs(a(i, c)) > std::fabs(a(piv, c))) piv = i;
        if (!(std::fabs(a(piv, c)) > 1e-14 * scale))
            throw FactorizationError("matrix is singular to working precision (column " + std::to_string(c) + ")");
        if (piv != c) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
            std::swap(b[c], b[piv]);
        }
        for (std::size_t i = c + 1; i < n; ++i) {
            const double f = a(i, c) / a(c, c);
            if (f == 0.0) continue;
            for (std::size_t j = c; j < n; ++j) a(i, j) -= f * a(c, j);
            b[i] -= f * b[c];
        }
    }
    Vector x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

}  // namespace seqpolicy
