#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eqadapt/constraint.hpp"
#include "test_support.hpp"

using namespace eqadapt;

namespace
{

void expect_invariants(const ConstraintSpec &spec, double tol = 1e-10)
{
    const auto r = residuals(spec);
    EXPECT_LE(r.particular, tol);
    EXPECT_LE(r.null_space, tol);
    EXPECT_LE(r.orthonormal, tol);
    EXPECT_LE(r.range_orthonormal, tol);
    EXPECT_GT(spec.kappa1, 0.0);
    EXPECT_LE(spec.kappa1, spec.kappa2);
}

} // namespace

TEST(BuildConstraint, EqualityOfLeadingTwoParameters)
{
    const auto spec = build_constraint(Matrix{{1.0, -1.0, 0.0, 0.0}}, Vector::Zero(1));
    expect_invariants(spec);
    EXPECT_EQ(spec.F.rows(), 4);
    EXPECT_EQ(spec.F.cols(), 3);
    EXPECT_LE(spec.theta0.cwiseAbs().maxCoeff(), 1e-15);

    // Any valid basis spans {v : v1 = v2}; compare projectors.
    const double s = 1.0 / std::sqrt(2.0);
    const Matrix hand_F = Matrix{{s, s, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}.transpose();
    EXPECT_LE((spec.null_projector() - hand_F * hand_F.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_DOUBLE_EQ(spec.kappa1, 2.0);
    EXPECT_DOUBLE_EQ(spec.kappa2, 2.0);
}

TEST(BuildConstraint, IdentityBlockForcesLeadingCoordinates)
{
    Matrix A = Matrix::Zero(2, 4);
    A.leftCols(2).setIdentity();
    const auto spec = build_constraint(A, Vector{{3.0, 7.0}});
    expect_invariants(spec);
    EXPECT_TRUE(spec.theta0.isApprox(Vector{{3.0, 7.0, 0.0, 0.0}}, 1e-14));
    Matrix expected = Matrix::Zero(4, 4);
    expected(2, 2) = expected(3, 3) = 1.0;
    EXPECT_LE((spec.null_projector() - expected).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(BuildConstraint, MinimumNormSolutionIsSymmetric)
{
    const auto spec = build_constraint(Matrix{{1.0, 1.0}}, Vector{{2.0}});
    EXPECT_NEAR(spec.theta0(0), 1.0, 1e-15);
    EXPECT_NEAR(spec.theta0(1), 1.0, 1e-15);
}

TEST(BuildConstraint, RejectsRankDeficientMatrix)
{
    const Matrix A{{1.0, 1.0, 0.0}, {2.0, 2.0, 0.0}};
    try {
        build_constraint(A, Vector::Zero(2));
        FAIL() << "expected RankDeficient";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::RankDeficient);
    }
}

TEST(BuildConstraint, RejectsTooManyConstraints)
{
    try {
        build_constraint(Matrix::Identity(3, 3), Vector::Zero(3));
        FAIL() << "expected DimensionError";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Dimension);
    }
    EXPECT_THROW(build_constraint(Matrix{{1.0, 0.0}}, Vector::Zero(2)), Error);
}

TEST(BuildConstraint, RandomInstancesSatisfyInvariants)
{
    std::mt19937 rng(20240611);
    std::uniform_int_distribution<int> pick_p(2, 12);
    for (int trial = 0; trial < 200; ++trial) {
        const int p = pick_p(rng);
        const int m = std::uniform_int_distribution<int>(1, p - 1)(rng);
        const Matrix A = testing_support::random_matrix(rng, m, p);
        const Vector d = testing_support::random_vector(rng, m);
        const auto spec = build_constraint(A, d);
        expect_invariants(spec, 1e-10);

        // FF^T fixes every null-space vector and is idempotent.
        const Vector v = spec.F * testing_support::random_vector(rng, p - m);
        EXPECT_LE((spec.null_projector() * v - v).norm(), 1e-9 * v.norm());
        const Matrix P = spec.null_projector();
        EXPECT_LE((P * P - P).cwiseAbs().maxCoeff(), 1e-9);

        // range_basis complements F
        EXPECT_LE((spec.range_basis.transpose() * spec.F).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(BuildConstraint, ProjectorFixesDifferenceOfFeasiblePoints)
{
    std::mt19937 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 3 + trial % 8;
        const int m = 1 + trial % (p - 1);
        const auto spec = build_constraint(testing_support::random_matrix(rng, m, p),
                                           testing_support::random_vector(rng, m));
        const Vector theta = lift(spec, testing_support::random_vector(rng, p - m));
        const Vector theta_hat = lift(spec, testing_support::random_vector(rng, p - m));
        const Vector tilde = theta - theta_hat;
        EXPECT_LE((tilde - spec.null_projector() * tilde).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(WithBasis, AcceptsAlternativeOrthonormalBasis)
{
    // Hand-built basis for theta2 = theta4, different from the SVD one.
    const double s = 1.0 / std::sqrt(2.0);
    const Matrix F = Matrix{{s, 0.5, 0, 0.5}, {0, 0, 1, 0}, {-s, 0.5, 0, 0.5}}.transpose();
    const auto base = build_constraint(Matrix{{0.0, -1.0, 0.0, 1.0}}, Vector::Zero(1));
    const auto spec = with_basis(base, F);
    expect_invariants(spec, 1e-12);
    EXPECT_LE((spec.null_projector() - base.null_projector()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_THROW(with_basis(base, Matrix::Identity(4, 3)), Error);
}

TEST(Lift, ZeroCoordinateGivesParticularSolution)
{
    const auto spec = build_constraint(Matrix{{1.0, 2.0, 3.0}}, Vector{{4.0}});
    EXPECT_TRUE(lift(spec, Vector::Zero(2)).isApprox(spec.theta0));
}

TEST(Lift, UnitCoordinateGivesBasisColumn)
{
    const auto spec = build_constraint(Matrix{{1.0, 2.0, 3.0, 0.5}, {0.0, 1.0, -1.0, 2.0}}, Vector{{4.0, -1.0}});
    for (Eigen::Index i = 0; i < spec.reduced_dim(); ++i) {
        const Vector diff = lift(spec, Vector::Unit(spec.reduced_dim(), i)) - spec.theta0;
        EXPECT_LE((diff - spec.F.col(i)).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Lift, InitialEstimateFromReducedCoordinate)
{
    // z = F^T (theta_hat(t0) - theta0) for a hand-built basis, computed by
    // hand: first entry 4.5 * 2 / sqrt(2) = 6.3640
    const double s = 1.0 / std::sqrt(2.0);
    const Matrix F = Matrix{{s, s, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}.transpose();
    const auto spec = with_basis(build_constraint(Matrix{{1.0, -1.0, 0.0, 0.0}}, Vector::Zero(1)), F);
    const Vector z{{9.0 / std::sqrt(2.0), 4.5, 15.0}};
    EXPECT_NEAR(z(0), 6.3640, 5e-5);
    EXPECT_LE((lift(spec, z) - Vector{{4.5, 4.5, 4.5, 15.0}}).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Lift, StaysFeasibleForLargeCoordinates)
{
    std::mt19937 rng(3);
    const auto spec = build_constraint(testing_support::random_matrix(rng, 2, 6), testing_support::random_vector(rng, 2));
    Vector z = testing_support::random_vector(rng, 4);
    z *= 1e6 / z.norm();
    EXPECT_LE(violation(spec, lift(spec, z)), 1e-9);
}

TEST(Lift, RejectsWrongLength)
{
    const auto spec = build_constraint(Matrix{{1.0, -1.0, 0.0, 0.0}}, Vector::Zero(1));
    EXPECT_THROW(lift(spec, Vector::Zero(2)), Error);
}

TEST(Retract, RoundTripsFeasibleEstimates)
{
    const auto spec = build_constraint(Matrix{{1.0, -1.0, 0.0, 0.0}}, Vector::Zero(1));
    const Vector theta_hat{{4.5, 4.5, 4.5, 15.0}};
    EXPECT_LE((lift(spec, retract(spec, theta_hat)) - theta_hat).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE(retract(spec, spec.theta0).norm(), 1e-15);

    std::mt19937 rng(11);
    const auto general =
        build_constraint(testing_support::random_matrix(rng, 3, 7), testing_support::random_vector(rng, 3));
    for (int i = 0; i < 20; ++i) {
        const Vector feasible = lift(general, testing_support::random_vector(rng, 4));
        EXPECT_LE((lift(general, retract(general, feasible)) - feasible).cwiseAbs().maxCoeff(), 1e-9);
        const Vector z = testing_support::random_vector(rng, 4);
        EXPECT_LE((retract(general, lift(general, z)) - z).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Retract, RejectsInfeasibleEstimate)
{
    const auto spec = build_constraint(Matrix{{1.0, -1.0, 0.0, 0.0}}, Vector::Zero(1));
    try {
        retract(spec, Vector{{4.6, 4.5, 4.5, 15.0}});
        FAIL() << "expected InfeasibleInitialEstimate";
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::InfeasibleInitialEstimate);
    }
}

TEST(Retract, NonzeroOffsetConstraint)
{
    const auto spec = build_constraint(Matrix{{1.0, 1.0, 1.0}}, Vector{{3.0}});
    EXPECT_TRUE(spec.theta0.isApprox(Vector{{1.0, 1.0, 1.0}}, 1e-14));
    const Vector feasible{{2.0, 0.5, 0.5}};
    EXPECT_LE((lift(spec, retract(spec, feasible)) - feasible).cwiseAbs().maxCoeff(), 1e-12);
}
