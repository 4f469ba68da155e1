#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "seqpolicy/numerics/cholesky.hpp"
#include "seqpolicy/numerics/matrix.hpp"
#include "seqpolicy/numerics/random.hpp"

using namespace seqpolicy;

namespace {

// Gaussian elimination with partial pivoting; test-only oracle that shares no
// code with the Cholesky path.
Vector gauss_solve(Matrix a, Vector b) {
    const std::size_t n = a.rows();
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a(r, c)) > std::fabs(a(piv, c))) piv = r;
        for (std::size_t j = 0; j < n; ++j) std::swap(a(c, j), a(piv, j));
        std::swap(b[c], b[piv]);
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a(r, c) / a(c, c);
            for (std::size_t j = c; j < n; ++j) a(r, j) -= f * a(c, j);
            b[r] -= f * b[c];
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

Matrix random_pd(std::size_t d, RngStream& rng) {
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) m(i, j) = rng.normal();
    Matrix a = m * m.transpose();
    for (std::size_t i = 0; i < d; ++i) a(i, i) += 0.1;
    return a;
}

}  // namespace

TEST(SolveSpd, IdentityReturnsRhs) {
    const Vector x = solve_spd(SpdMatrix::identity(3), Vector{1, 2, 3});
    EXPECT_EQ(x, (Vector{1, 2, 3}));
}

TEST(SolveSpd, DiagonalByHand) {
    const Vector x = solve_spd(SpdMatrix(Matrix{{4, 0}, {0, 9}}), Vector{8, 18});
    EXPECT_DOUBLE_EQ(x[0], 2.0);
    EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(SolveSpd, TwoByTwoElimination) {
    const Vector x = solve_spd(SpdMatrix(Matrix{{2, 1}, {1, 2}}), Vector{3, 3});
    EXPECT_NEAR(x[0], 1.0, 1e-15);
    EXPECT_NEAR(x[1], 1.0, 1e-15);
}

TEST(SolveSpd, NonPositiveDefiniteThrows) {
    EXPECT_THROW(solve_spd(SpdMatrix(Matrix{{1, 2}, {2, 1}}), Vector{1, 1}), FactorizationError);
    EXPECT_THROW(SpdMatrix(Matrix{{1, 2}, {0, 1}}), SchemaError);
}

TEST(SolveSpd, ResidualBoundOnRandomMatrices) {
    RngStream rng(7, 1);
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t d = 1 + rng.uniform_index(20);
        const Matrix a = random_pd(d, rng);
        Vector b(d);
        for (auto& v : b) v = rng.normal(0.0, 10.0);
        const Vector x = solve_spd(SpdMatrix(a), b);
        Vector r = a * x;
        for (std::size_t i = 0; i < d; ++i) r[i] -= b[i];
        ASSERT_LE(norm_inf(r), 1e-8 * (1.0 + norm_inf(b))) << "rep " << rep << " d " << d;
    }
}

TEST(RidgeFit, OlsMean) {
    const Vector beta = ridge_fit(Matrix{{1}, {1}}, Vector{2, 4}, 0.0);
    EXPECT_DOUBLE_EQ(beta[0], 3.0);
}

TEST(RidgeFit, IdentityDesignWithUnitPenalty) {
    const Vector beta = ridge_fit(Matrix::identity(2), Vector{1, 1}, 1.0);
    EXPECT_DOUBLE_EQ(beta[0], 0.5);
    EXPECT_DOUBLE_EQ(beta[1], 0.5);
}

TEST(RidgeFit, PenaltyDominanceBound) {
    RngStream rng(3, 0);
    Matrix x(30, 4);
    Vector y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t j = 0; j < 4; ++j) x(i, j) = rng.normal();
        y[i] = rng.normal(2.0, 1.0);
    }
    const double xty = norm2(transpose_times(x, y));
    for (double lambda : {1e2, 1e4, 1e8}) {
        const Vector beta = ridge_fit(x, y, lambda);
        EXPECT_LE(norm2(beta), xty / lambda * (1 + 1e-12));
    }
}

TEST(RidgeFit, UnpenalizedMatchesNormalEquationOracle) {
    RngStream rng(11, 2);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t d = 1 + rng.uniform_index(8);
        const std::size_t n = d + 5 + rng.uniform_index(30);
        Matrix x(n, d);
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
            y[i] = rng.normal();
        }
        const Vector fit = ridge_fit(x, y, 0.0);
        const Vector oracle = gauss_solve(x.transpose() * x, x.transpose() * y);
        for (std::size_t j = 0; j < d; ++j) ASSERT_NEAR(fit[j], oracle[j], 1e-8);
    }
}

TEST(RidgeFit, SingularDesignWithoutPenaltyThrows) {
    EXPECT_THROW(ridge_fit(Matrix{{1, 1}, {1, 1}}, Vector{1, 2}, 0.0), FactorizationError);
    EXPECT_NO_THROW(ridge_fit(Matrix{{1, 1}, {1, 1}}, Vector{1, 2}, 1e-6));
}

TEST(SampleMvn, ZeroCovarianceReturnsMean) {
    RngStream rng(1, 1);
    const Vector m{1.5, -2.0};
    EXPECT_EQ(sample_mvn(m, Matrix(2, 2), rng), m);
}

TEST(SampleMvn, MomentsMatch) {
    RngStream rng(2024, 5);
    const std::size_t n = 100000;
    const Matrix cov = Matrix::identity(2);
    double m0 = 0, m1 = 0, s00 = 0, s01 = 0, s11 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vector d = sample_mvn(Vector{0, 0}, cov, rng);
        m0 += d[0];
        m1 += d[1];
        s00 += d[0] * d[0];
        s01 += d[0] * d[1];
        s11 += d[1] * d[1];
    }
    m0 /= n;
    m1 /= n;
    EXPECT_NEAR(m0, 0.0, 0.02);
    EXPECT_NEAR(m1, 0.0, 0.02);
    EXPECT_NEAR(s00 / n - m0 * m0, 1.0, 0.05);
    EXPECT_NEAR(s01 / n - m0 * m1, 0.0, 0.05);
    EXPECT_NEAR(s11 / n - m1 * m1, 1.0, 0.05);
}

TEST(SampleMvn, CorrelatedCovarianceMatches) {
    RngStream rng(9, 9);
    const Matrix cov{{2.0, 0.8}, {0.8, 1.0}};
    const std::size_t n = 100000;
    double s00 = 0, s01 = 0, s11 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vector d = sample_mvn(Vector{0, 0}, cov, rng);
        s00 += d[0] * d[0];
        s01 += d[0] * d[1];
        s11 += d[1] * d[1];
    }
    EXPECT_NEAR(s00 / n, 2.0, 0.05);
    EXPECT_NEAR(s01 / n, 0.8, 0.05);
    EXPECT_NEAR(s11 / n, 1.0, 0.05);
}

TEST(SampleMvn, NonPositiveDefiniteThrows) {
    RngStream rng(1, 1);
    EXPECT_THROW(sample_mvn(Vector{0, 0}, Matrix{{1, 2}, {2, 1}}, rng), FactorizationError);
}

TEST(SampleInverseGamma, MeanShape3Scale4) {
    RngStream rng(5, 5);
    double s = 0;
    for (int i = 0; i < 100000; ++i) {
        const double v = sample_inverse_gamma(3.0, 4.0, rng);
        ASSERT_GT(v, 0.0);
        s += v;
    }
    EXPECT_NEAR(s / 1e5, 2.0, 0.05);
}

TEST(SampleInverseGamma, MeanShape11Scale10) {
    RngStream rng(6, 6);
    double s = 0;
    for (int i = 0; i < 100000; ++i) s += sample_inverse_gamma(11.0, 10.0, rng);
    EXPECT_NEAR(s / 1e5, 1.0, 0.03);
}

TEST(SampleInverseGamma, StrictlyPositiveForTinyShape) {
    RngStream rng(8, 0);
    for (int i = 0; i < 10000; ++i) ASSERT_GT(sample_inverse_gamma(0.05, 1e-3, rng), 0.0);
}

TEST(SampleInverseGamma, RejectsBadParameters) {
    RngStream rng(1, 1);
    EXPECT_THROW(sample_inverse_gamma(0.0, 1.0, rng), ParameterError);
    EXPECT_THROW(sample_inverse_gamma(1.0, -1.0, rng), ParameterError);
}

TEST(RngStream, IdenticalSeedAndStreamReproduce) {
    RngStream a(42, 3), b(42, 3), c(42, 4);
    const Matrix cov{{1.0, 0.3}, {0.3, 2.0}};
    bool differs = false;
    for (int i = 0; i < 100; ++i) {
        const Vector da = sample_mvn(Vector{0, 1}, cov, a);
        const Vector db = sample_mvn(Vector{0, 1}, cov, b);
        ASSERT_EQ(da, db);
        ASSERT_EQ(sample_inverse_gamma(2.0, 3.0, a), sample_inverse_gamma(2.0, 3.0, b));
        if (sample_mvn(Vector{0, 1}, cov, c) != da) differs = true;
        sample_inverse_gamma(2.0, 3.0, c);
    }
    EXPECT_TRUE(differs);
}

TEST(RngStream, StreamIdsSeparateReplicationsAndTags) {
    EXPECT_NE(stream_id(0, "smart"), stream_id(1, "smart"));
    EXPECT_NE(stream_id(0, "smart"), stream_id(0, "mrt"));
    EXPECT_EQ(stream_id(5, "bandit"), stream_id(5, "bandit"));
}
