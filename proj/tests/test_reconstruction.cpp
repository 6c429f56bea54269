#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "compdiff/reconstruction.hpp"

using namespace compdiff;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Vector gaussian(Eigen::Index n, std::mt19937_64& rng, double sd = 1.0) {
    std::normal_distribution<double> g(0.0, sd);
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = g(rng);
    return v;
}

Matrix gaussian(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j) m(i, j) = g(rng);
    return m;
}

ReconstructionState nlms(Vector a, double sigma) {
    ReconstructionState s;
    s.kind = ReconstructionKind::reduced_dim_nlms;
    s.a = std::move(a);
    s.sigma = sigma;
    return s;
}

ReconstructionState geometric(Vector a) {
    ReconstructionState s;
    s.kind = ReconstructionKind::single_bit_geometric;
    s.a = std::move(a);
    return s;
}

ReconstructionState sign_lms(Vector a, double sigma) {
    ReconstructionState s;
    s.kind = ReconstructionKind::single_bit_sign_lms;
    s.a = std::move(a);
    s.sigma = sigma;
    return s;
}

// The closed form with gamma = 1 - sign(z) sign(c^T a), written out
// literally as an oracle for the geometric update.
Vector gamma_formula(const Vector& a, const Vector& c, int sign_z) {
    const double gamma = 1.0 - sign_z * sign_of(c.dot(a));
    const Vector num = a - gamma * c.dot(a) / (2.0 * c.squaredNorm()) * c;
    return num / num.norm();
}

}  // namespace

TEST(SignOf, ZeroIsPositive) {
    EXPECT_EQ(sign_of(0.0), 1);
    EXPECT_EQ(sign_of(-0.0), 1);
    EXPECT_EQ(sign_of(1e-300), 1);
    EXPECT_EQ(sign_of(-1e-300), -1);
}

TEST(InitialState, GeometricStartsOnSphere) {
    const auto g = ReconstructionState::initial(ReconstructionKind::single_bit_geometric, 4, 0.0);
    EXPECT_EQ(g.a, vec({1, 0, 0, 0}));
    EXPECT_EQ(ReconstructionState::initial(ReconstructionKind::reduced_dim_nlms, 3, 0.5).a, Vector::Zero(3));
    EXPECT_EQ(ReconstructionState::initial(ReconstructionKind::single_bit_sign_lms, 3, 0.5).a, Vector::Zero(3));
}

TEST(ReducedNlms, IdentityProjectionRecoversExactly) {
    const auto next = reduced_dim_reconstruct(nlms(vec({7, 7}), 1.0), Matrix::Identity(2, 2), vec({4, -2}));
    EXPECT_NEAR(next.a(0), 4.0, 1e-15);
    EXPECT_NEAR(next.a(1), -2.0, 1e-15);
}

TEST(ReducedNlms, SingleRowByHand) {
    // C = [1 0], phi = [2, 3] -> z = [2]; from a = 0 the correction is [2, 0].
    Matrix c(1, 2);
    c << 1, 0;
    const auto next = reduced_dim_reconstruct(nlms(Vector::Zero(2), 1.0), c, vec({2}));
    EXPECT_NEAR(next.a(0), 2.0, 1e-15);
    EXPECT_NEAR(next.a(1), 0.0, 1e-15);
}

TEST(ReducedNlms, ZeroStepLeavesStateUnchanged) {
    std::mt19937_64 rng(1);
    const Vector a = gaussian(4, rng);
    const auto next = reduced_dim_reconstruct(nlms(a, 0.0), gaussian(2, 4, rng), gaussian(2, rng));
    EXPECT_EQ(next.a, a);
}

TEST(ReducedNlms, RankDeficientProjectionIsRejected) {
    Matrix c(2, 3);
    c << 1, 2, 3, 2, 4, 6;
    EXPECT_THROW(reduced_dim_reconstruct(nlms(Vector::Zero(3), 1.0), c, vec({1, 2})), std::domain_error);
}

TEST(ReducedNlms, UnitStepSatisfiesConstraint) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index m = 1 + static_cast<Eigen::Index>(rng() % 8);
        const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m));
        const Matrix c = gaussian(p, m, rng);
        const Vector z = c * gaussian(m, rng);
        const auto next = reduced_dim_reconstruct(nlms(gaussian(m, rng), 1.0), c, z);
        EXPECT_LT((c * next.a - z).norm(), 1e-9 * z.norm()) << "m=" << m << " p=" << p;
    }
}

TEST(ReducedNlms, MatchesProjectorForm) {
    // a + sigma C^T (C C^T)^-1 (z - C a) == (I - sigma P) a + sigma P phi,
    // with P built from a pseudo-inverse rather than the solver under test.
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 6);
        const Eigen::Index p = 1 + static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(m));
        const Matrix c = gaussian(p, m, rng);
        const Matrix proj = c.completeOrthogonalDecomposition().pseudoInverse() * c;
        const Vector a = gaussian(m, rng), phi = gaussian(m, rng);
        const double sigma = std::uniform_real_distribution<double>(0.05, 1.95)(rng);
        const Vector expected = (Matrix::Identity(m, m) - sigma * proj) * a + sigma * proj * phi;
        const auto next = reduced_dim_reconstruct(nlms(a, sigma), c, c * phi);
        EXPECT_LT((next.a - expected).norm(), 1e-9 * (1.0 + expected.norm()));
        EXPECT_LT((RowSpaceSolver(c).projector() - proj).norm(), 1e-9);
    }
}

TEST(ReducedNlms, StaticSquareProjectionTracksAfterOneStep) {
    std::mt19937_64 rng(4);
    const Matrix c = gaussian(5, 5, rng);
    const Vector phi = gaussian(5, rng);
    auto s = nlms(gaussian(5, rng), 1.0);
    for (int t = 0; t < 20; ++t) {
        s = reduced_dim_reconstruct(std::move(s), c, c * phi);
        EXPECT_LT((s.a - phi).norm(), 1e-9);
    }
}

TEST(ReducedNlms, StaticProjectionConvergesToRowSpaceComponent) {
    std::mt19937_64 rng(5);
    const Eigen::Index m = 6, p = 2;
    const Matrix c = gaussian(p, m, rng);
    const Matrix proj = c.completeOrthogonalDecomposition().pseudoInverse() * c;
    const Vector phi = gaussian(m, rng), a0 = gaussian(m, rng);
    const Vector limit = a0 + proj * (phi - a0);
    for (double sigma : {0.3, 1.0, 1.7}) {
        auto s = nlms(a0, sigma);
        double prev = (proj * (phi - s.a)).norm();
        for (int t = 0; t < 60; ++t) {
            s = reduced_dim_reconstruct(std::move(s), c, c * phi);
            const double err = (proj * (phi - s.a)).norm();
            if (prev > 1e-12) EXPECT_NEAR(err / prev, std::abs(1.0 - sigma), 1e-6);
            // nothing moves outside the row space
            EXPECT_LT(((Matrix::Identity(m, m) - proj) * (s.a - a0)).norm(), 1e-9);
            prev = err;
        }
        EXPECT_LT((s.a - limit).norm(), 1e-6) << "sigma=" << sigma;
    }
}

TEST(Geometric, AgreeingSignsAreIdentity) {
    const auto s = single_bit_geometric_update(geometric(vec({1, 0})), vec({1, 0}), +1);
    EXPECT_EQ(s.a, vec({1, 0}));
    EXPECT_EQ(s.degenerate_updates, 0u);
}

TEST(Geometric, DisagreeingSignProjectsAndNormalizes) {
    const double h = std::sqrt(2.0) / 2.0;
    const auto s = single_bit_geometric_update(geometric(vec({-h, h})), vec({1, 0}), +1);
    EXPECT_NEAR(s.a(0), 0.0, 1e-15);
    EXPECT_NEAR(s.a(1), 1.0, 1e-15);
}

TEST(Geometric, ParallelDisagreementIsSkippedAndCounted) {
    auto s = single_bit_geometric_update(geometric(vec({-1, 0})), vec({1, 0}), +1);
    EXPECT_EQ(s.a, vec({-1, 0}));
    EXPECT_EQ(s.degenerate_updates, 1u);
    s = single_bit_geometric_update(std::move(s), vec({-3, 0}), -1);
    EXPECT_EQ(s.degenerate_updates, 2u);
}

TEST(Geometric, MatchesGammaFormulaAndStaysOnSphere) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 2000; ++trial) {
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng() % 7);
        Vector a = gaussian(m, rng);
        a.normalize();
        const Vector c = gaussian(m, rng, std::uniform_real_distribution<double>(0.01, 3.0)(rng));
        const int sign_z = (rng() & 1) ? 1 : -1;
        const auto next = single_bit_geometric_update(geometric(a), c, sign_z);
        EXPECT_LT((next.a - gamma_formula(a, c, sign_z)).norm(), 1e-12);
        EXPECT_NEAR(next.a.norm(), 1.0, 1e-10);
    }
}

TEST(Geometric, UnitNormHoldsOverLongSequences) {
    std::mt19937_64 rng(7);
    auto s = ReconstructionState::initial(ReconstructionKind::single_bit_geometric, 6, 0.0);
    const Vector phi = gaussian(6, rng);
    for (int t = 0; t < 10000; ++t) {
        const Vector c = gaussian(6, rng, 0.1);
        s = single_bit_geometric_update(std::move(s), c, geometric_payload(c, phi).sign);
        ASSERT_LT(std::abs(s.a.norm() - 1.0), 1e-10) << "t=" << t;
    }
    // Direction is learned from signs alone.
    EXPECT_GT(s.a.dot(phi.normalized()), 0.99);
}

TEST(SignLms, ZeroStepIsIdentity) {
    const auto s = single_bit_sign_lms_reconstruct(sign_lms(vec({1, 2}), 0.0), vec({3, 4}), -1);
    EXPECT_EQ(s.a, vec({1, 2}));
}

TEST(SignLms, StepByHand) {
    // a = 0, c = [1, 0], phi = [2, 3]: eps = 2, bit +1.
    const Vector a = Vector::Zero(2), c = vec({1, 0}), phi = vec({2, 3});
    const auto bit = sign_lms_payload(c, phi, a);
    EXPECT_EQ(bit.sign, 1);
    const auto s = single_bit_sign_lms_reconstruct(sign_lms(a, 0.01), c, bit.sign);
    EXPECT_DOUBLE_EQ(s.a(0), 0.01);
    EXPECT_DOUBLE_EQ(s.a(1), 0.0);
}

TEST(SignLms, ZeroErrorCountsAsPositive) {
    const Vector a = vec({1, 1}), c = vec({1, -1}), phi = vec({3, 3});
    const auto bit = sign_lms_payload(c, phi, a);
    EXPECT_EQ(bit.sign, 1);
    const auto s = single_bit_sign_lms_reconstruct(sign_lms(a, 0.5), c, bit.sign);
    EXPECT_EQ(s.a, (a + 0.5 * c).eval());
}

TEST(SignLms, ReplicasFedSameBitsStayIdentical) {
    std::mt19937_64 rng(8);
    auto tx = ReconstructionState::initial(ReconstructionKind::single_bit_sign_lms, 6, 0.01);
    auto rx1 = tx, rx2 = tx;
    Vector phi = gaussian(6, rng);
    for (int t = 0; t < 10000; ++t) {
        phi += gaussian(6, rng, 0.01);
        const Vector c = gaussian(6, rng, 0.1);
        const int bit = sign_lms_payload(c, phi, tx.a).sign;
        tx = single_bit_sign_lms_reconstruct(std::move(tx), c, bit);
        rx1 = single_bit_sign_lms_reconstruct(std::move(rx1), c, bit);
        rx2 = single_bit_sign_lms_reconstruct(std::move(rx2), c, bit);
        ASSERT_TRUE(rx1 == tx && rx2 == tx) << "t=" << t;
    }
}

TEST(Updates, RejectMismatchedKinds) {
    EXPECT_THROW(single_bit_geometric_update(nlms(vec({1, 0}), 1.0), vec({1, 0}), 1), std::logic_error);
    EXPECT_THROW(single_bit_sign_lms_reconstruct(geometric(vec({1, 0})), vec({1, 0}), 1), std::logic_error);
    EXPECT_THROW(reduced_dim_reconstruct(geometric(vec({1, 0})), Matrix::Identity(2, 2), vec({1, 0})),
                 std::logic_error);
}

TEST(Payload, ContentsAndBitAccounting) {
    EXPECT_EQ(geometric_payload(vec({1, 0}), vec({3, 0})).sign, 1);
    EXPECT_EQ(geometric_payload(vec({1, 0}), vec({-3, 0})).sign, -1);

    Matrix c(1, 2);
    c << 1, 0;
    const auto z = reduced_payload(c, vec({2, 3}));
    ASSERT_EQ(z.values.size(), 1);
    EXPECT_EQ(z.values(0), 2.0);

    EXPECT_EQ(full_payload(Vector::Zero(6)).bits(), 384u);
    EXPECT_EQ(z.bits(), 64u);
    EXPECT_EQ(geometric_payload(vec({1, 0}), vec({3, 0})).bits(), 1u);
}

TEST(Payload, TransmitUsesScheduleDraw) {
    const ProjectionSchedule mat(3, 4, 2, 0.5, ProjectionKind::matrix);
    const auto vecs = ProjectionSchedule::vector(3, 4, 0.5);
    const Vector phi = vec({1, -2, 3, -4});
    const auto own = ReconstructionState::initial(ReconstructionKind::single_bit_sign_lms, 4, 0.1);

    const auto z = transmit_payload(phi, mat, 7, ReconstructionKind::reduced_dim_nlms, own);
    EXPECT_EQ(z.values, (mat.matrix_at(7) * phi).eval());
    const auto g = transmit_payload(phi, vecs, 7, ReconstructionKind::single_bit_geometric, own);
    EXPECT_EQ(g.sign, sign_of(vecs.vector_at(7).dot(phi)));
    const auto s = transmit_payload(phi, vecs, 7, ReconstructionKind::single_bit_sign_lms, own);
    EXPECT_EQ(s.sign, sign_of(vecs.vector_at(7).dot(phi - own.a)));
}
