#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "compdiff/projection.hpp"
#include "compdiff/stability.hpp"

using namespace compdiff;

namespace {

Matrix random_stochastic(Eigen::Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix l(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) l(i, j) = u(rng);
        l.row(i) /= l.row(i).sum();
        l(i, i) = 1.0 - (l.row(i).sum() - l(i, i));
    }
    return l;
}

Matrix random_psd(Eigen::Index n, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) a(i, j) = g(rng);
    return scale * a * a.transpose() / static_cast<double>(n);
}

// Every eigenvalue in `a` has a partner in `b` within tol (greedy, one-to-one).
bool same_spectrum(const ComplexVector& a, const ComplexVector& b, double tol) {
    if (a.size() != b.size()) return false;
    std::vector<bool> used(static_cast<std::size_t>(b.size()), false);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        Eigen::Index best = -1;
        double best_d = 1e300;
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double d = std::abs(a(i) - b(j));
            if (d < best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best < 0 || best_d > tol) return false;
        used[static_cast<std::size_t>(best)] = true;
    }
    return true;
}

}  // namespace

TEST(Kronecker, SmallProduct) {
    Matrix a(2, 2), b(1, 2);
    a << 1, 2, 3, 4;
    b << 5, 6;
    Matrix expected(2, 4);
    expected << 5, 6, 10, 12, 15, 18, 20, 24;
    EXPECT_EQ(kronecker(a, b), expected);
}

TEST(StateSpace, SingleNodeIsBlockDiagonal) {
    const Matrix R = 0.1 * Matrix::Identity(2, 2);
    const Matrix H = 0.5 * Matrix::Identity(2, 2);
    const auto model = build_state_space(Matrix::Ones(1, 1), {0.3}, {0.5}, R, H);
    EXPECT_EQ(model.G, Matrix::Identity(2, 2));
    EXPECT_EQ(model.G_tilde, Matrix::Zero(2, 2));
    const Matrix t = model.transition();
    EXPECT_EQ(t.topRightCorner(2, 2), Matrix::Zero(2, 2));
    EXPECT_EQ(t.topLeftCorner(2, 2), (Matrix::Identity(2, 2) - 0.3 * R).eval());
    EXPECT_EQ(t.bottomRightCorner(2, 2), (Matrix::Identity(2, 2) - 0.5 * H).eval());
}

TEST(StateSpace, StructureInvariants) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 4);
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 3);
        std::vector<double> mu(static_cast<std::size_t>(n)), sigma(static_cast<std::size_t>(n));
        std::uniform_real_distribution<double> step(0.01, 1.0);
        for (auto& v : mu) v = step(rng);
        for (auto& v : sigma) v = step(rng);
        const Matrix lambda = random_stochastic(n, rng);
        const auto model = build_state_space(lambda, mu, sigma, random_psd(n * m, rng, 0.1), random_psd(n * m, rng, 1.0));
        for (Eigen::Index i = 0; i < n; ++i) EXPECT_EQ(model.G_tilde.block(i * m, i * m, m, m), Matrix::Zero(m, m));
        EXPECT_EQ(model.transition().bottomLeftCorner(n * m, n * m), Matrix::Zero(n * m, n * m));
        EXPECT_TRUE(model.D.isDiagonal());
        EXPECT_TRUE(model.S.isDiagonal());
        const Matrix self_part = kronecker(Matrix(lambda.diagonal().asDiagonal()), Matrix::Identity(m, m));
        EXPECT_EQ(model.G - model.G_tilde, self_part);
    }
}

TEST(StateSpace, SpectrumIsUnionOfDiagonalBlocks) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 40; ++trial) {
        const Eigen::Index n = 2, m = 2;
        std::uniform_real_distribution<double> step(0.05, 1.5);
        const auto model = build_state_space(random_stochastic(n, rng), {step(rng), step(rng)}, {step(rng), step(rng)},
                                             random_psd(n * m, rng, 0.2), random_psd(n * m, rng, 1.0));
        ComplexVector blocks(2 * n * m);
        blocks << eigenvalues(model.estimate_block()), eigenvalues(model.reconstruction_block());
        EXPECT_TRUE(same_spectrum(eigenvalues(model.transition()), blocks, 1e-8));
    }
}

TEST(StateSpace, RejectsDimensionMismatch) {
    const Matrix I2 = Matrix::Identity(2, 2);
    EXPECT_THROW(build_state_space(Matrix::Ones(1, 1), {0.3, 0.3}, {0.5}, I2, I2), std::invalid_argument);
    EXPECT_THROW(build_state_space(Matrix::Ones(1, 1), {0.3}, {0.5}, I2, Matrix::Identity(3, 3)),
                 std::invalid_argument);
    EXPECT_THROW(build_state_space(Matrix::Identity(2, 2), {0.3, 0.3}, {0.5, 0.5}, Matrix::Identity(3, 3),
                                   Matrix::Identity(3, 3)),
                 std::invalid_argument);
    Matrix bad(2, 2);
    bad << 0.5, 0.6, 0, 1;
    EXPECT_THROW(build_state_space(bad, {0.3, 0.3}, {0.5, 0.5}, Matrix::Identity(2, 2), Matrix::Identity(2, 2)),
                 std::invalid_argument);
}

TEST(ExpectedHReduced, ScalarCaseIsOne) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const Matrix h = expected_H_reduced(1, [&] { return Vector::Constant(1, g(rng)); }, 1000);
    EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
}

TEST(ExpectedHReduced, SymmetricPsdUnitTraceForAnyLaw) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    // Anisotropic law.
    const Vector scale = (Vector(4) << 3.0, 1.0, 0.2, 0.05).finished();
    const Matrix h = expected_H_reduced(4, [&] {
        Vector c(4);
        for (int i = 0; i < 4; ++i) c(i) = scale(i) * g(rng);
        return c;
    }, 20000);
    EXPECT_LT((h - h.transpose()).norm(), 1e-15);
    EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(h).eigenvalues().minCoeff(), -1e-15);
    EXPECT_NEAR(h.trace(), 1.0, 1e-12);
    EXPECT_GT(h(0, 0), h(3, 3));
}

TEST(ExpectedHReduced, IsotropicGaussianApproachesIdentityOverM) {
    const auto schedule = ProjectionSchedule::vector(5, 6, 1.0);
    std::uint64_t t = 0;
    const Matrix h = expected_H_reduced(6, [&] { return schedule.vector_at(t++); }, 200000);
    EXPECT_LT((h - Matrix::Identity(6, 6) / 6.0).cwiseAbs().maxCoeff(), 0.01);
}

TEST(ExpectedHReduced, MatrixProjectionsHaveTraceP) {
    const ProjectionSchedule schedule(6, 5, 2, 0.5, ProjectionKind::matrix);
    std::uint64_t t = 0;
    const Matrix h = expected_H_reduced(5, [&] { return schedule.matrix_at(t++); }, 20000);
    EXPECT_NEAR(h.trace(), 2.0, 1e-10);
    EXPECT_LT((h - 0.4 * Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.02);
}

TEST(ExpectedHSingleBit, ConstantsCancel) {
    const double k = SignBitLinearization::price_constant;
    EXPECT_NEAR(k, std::sqrt(2.0 / M_PI), 1e-16);
    const Matrix h = expected_H_single_bit({{k, k, k}}, Matrix::Identity(2, 2));
    EXPECT_LT((h - Matrix::Identity(6, 6)).norm(), 1e-15);
}

TEST(ExpectedHSingleBit, InverseInEpsVariance) {
    const Matrix cov = (Matrix(2, 2) << 1.0, 0.2, 0.2, 0.5).finished();
    const Matrix h1 = expected_H_single_bit({{0.3, 0.7}}, cov);
    const Matrix h2 = expected_H_single_bit({{0.6, 1.4}}, cov);
    EXPECT_LT((h2 - 0.5 * h1).norm(), 1e-15);
    EXPECT_EQ(h1.block(0, 2, 2, 2), Matrix::Zero(2, 2));
}

TEST(ExpectedHSingleBit, ScalarValue) {
    const Matrix h = expected_H_single_bit({{1.0}}, Matrix::Ones(1, 1));
    EXPECT_NEAR(h(0, 0), 0.7978845608028654, 1e-15);
}

TEST(ExpectedHSingleBit, ZeroVarianceIsSingular) {
    EXPECT_THROW(expected_H_single_bit({{1.0, 0.0}}, Matrix::Identity(2, 2)), std::domain_error);
}

TEST(MeanStable, ScalarConditionIsOneMinusSigma) {
    for (double sigma : {0.1, 0.5, 0.99, 1.0, 1.5, 1.99, 2.0, 2.5, 3.0}) {
        const auto model = build_state_space(Matrix::Ones(1, 1), {0.3}, {sigma}, 0.1 * Matrix::Ones(1, 1),
                                             Matrix::Ones(1, 1));
        const auto r = mean_stable(model);
        EXPECT_NEAR(r.rho_recon, std::abs(1.0 - sigma), 1e-15);
        EXPECT_EQ(r.stable, std::abs(1.0 - sigma) < 1.0) << "sigma=" << sigma;
    }
}

TEST(MeanStable, ShiftedIdentity) {
    const auto model = build_state_space(Matrix::Identity(2, 2), {0.3, 0.3}, {0.5, 0.5}, 0.1 * Matrix::Identity(4, 4),
                                         Matrix::Identity(4, 4));
    const auto r = mean_stable(model);
    EXPECT_NEAR(r.rho_recon, 0.5, 1e-15);
    EXPECT_NEAR(r.rho_full, 0.97, 1e-15);
    EXPECT_TRUE(r.stable);
}

TEST(MeanStable, UnstableFullBlockFlagsInstability) {
    const auto model = build_state_space(Matrix::Ones(1, 1), {25.0}, {0.5}, 0.1 * Matrix::Ones(1, 1),
                                         Matrix::Ones(1, 1));
    const auto r = mean_stable(model);
    EXPECT_NEAR(r.rho_full, 1.5, 1e-15);
    EXPECT_FALSE(r.stable);
}

// Iterating the assembled mean recursion decays exactly when the verdict
// says stable.
TEST(MeanStable, VerdictMatchesIteratedRecursion) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> mu(0.1, 40.0), sigma(0.1, 2.6);
    int stable_cases = 0, unstable_cases = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 2), m = 1 + static_cast<Eigen::Index>(rng() % 2);
        std::vector<double> mus(static_cast<std::size_t>(n)), sigmas(static_cast<std::size_t>(n));
        for (auto& v : mus) v = mu(rng);
        for (auto& v : sigmas) v = sigma(rng);
        const auto model = build_state_space(random_stochastic(n, rng), mus, sigmas,
                                             0.05 * Matrix::Identity(n * m, n * m),
                                             block_diagonal(Matrix::Identity(m, m) / static_cast<double>(m),
                                                            static_cast<std::size_t>(n)));
        const auto verdict = mean_stable(model);
        const double rho = std::max(verdict.rho_full, verdict.rho_recon);
        if (std::abs(rho - 1.0) < 0.02) continue;  // too slow to decide in finite steps
        const Matrix t = model.transition();
        Vector x = Vector::Ones(2 * n * m);
        for (int k = 0; k < 3000 && x.norm() < 1e12; ++k) x = t * x;
        const bool decayed = x.norm() < 1e-6;
        EXPECT_EQ(decayed, verdict.stable) << "rho_full=" << verdict.rho_full << " rho_recon=" << verdict.rho_recon;
        (verdict.stable ? stable_cases : unstable_cases)++;
    }
    EXPECT_GT(stable_cases, 10);
    EXPECT_GT(unstable_cases, 10);
}
