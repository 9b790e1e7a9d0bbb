#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "eqadapt/constraint.hpp"
#include "eqadapt/laws.hpp"
#include "eqadapt/plant.hpp"
#include "test_support.hpp"

using namespace eqadapt;
using testing_support::random_matrix;
using testing_support::random_vector;
using testing_support::central_difference_gradient;
using testing_support::cl_objective;
using testing_support::gradient_objective;

namespace
{

HistoryRecord exact_record(const Regressor &reg, const Vector &theta, const Vector &x, const Vector &u)
{
    const Matrix Y = reg(x);
    return HistoryRecord{x, u, Y * theta + u, Y};
}

HistoryRecord row_record(const Vector &row)
{
    Matrix Y(1, row.size());
    Y.row(0) = row.transpose();
    return HistoryRecord{Vector::Zero(1), Vector::Zero(1), Vector::Zero(1), Y};
}

} // namespace

TEST(Control, PerfectTrackingFixedPoint)
{
    const PlantConfig plant{benchmark_regressor(), Vector{{5.0, 5.0, 10.0, 20.0}}, Vector::Zero(2)};
    const ControllerConfig k{Vector{{20.0, 100.0}}};
    const Vector x{{1.3, -0.4}};
    const Vector xd_dot{{0.2, -3.0}};
    const Matrix Y = plant.regressor(x);
    const Vector u = control(k, Vector::Zero(2), xd_dot, Y, plant.theta_true);
    EXPECT_LE((plant_rhs(plant, x, u) - xd_dot).cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Control, PureFeedbackWhenRegressorVanishes)
{
    const ControllerConfig k{Vector{{20.0, 100.0}}};
    const Vector e0{{10.0, 5.0}};
    const Vector xd_dot{{0.0, 0.4}};
    const Vector u = control(k, e0, xd_dot, Matrix::Zero(2, 4), Vector{{4.5, 4.5, 4.5, 15.0}});
    EXPECT_TRUE(u.isApprox(xd_dot - Vector{{200.0, 500.0}}));
}

TEST(Control, InitialFeedbackTermOfFirstSimulation)
{
    // e(t0) = x(t0) - xd(0) = [10, 5]; k = 2 diag(10, 50)
    const ControllerConfig k{2.0 * Vector{{10.0, 50.0}}};
    const Vector u = control(k, Vector{{10.0, 5.0}}, Vector::Zero(2), Matrix::Zero(2, 4), Vector::Zero(4));
    EXPECT_DOUBLE_EQ(u(0), -200.0);
    EXPECT_DOUBLE_EQ(u(1), -500.0);
}

TEST(Control, ClosedLoopErrorDynamics)
{
    // xdot - xd_dot = Y theta_tilde - k e for any estimate
    const PlantConfig plant{benchmark_regressor(), Vector{{5.0, 20.0, 10.0, 20.0}}, Vector::Zero(2)};
    const ControllerConfig k{Vector{{20.0, 100.0}}};
    std::mt19937 rng(4);
    for (int i = 0; i < 10; ++i) {
        const Vector x = random_vector(rng, 2, 4.0);
        const Vector e = random_vector(rng, 2);
        const Vector xd_dot = random_vector(rng, 2);
        const Vector theta_hat = random_vector(rng, 4, 10.0);
        const Matrix Y = plant.regressor(x);
        const Vector edot = plant_rhs(plant, x, control(k, e, xd_dot, Y, theta_hat)) - xd_dot;
        const Vector expected = Y * (plant.theta_true - theta_hat) - k.gains.cwiseProduct(e);
        EXPECT_LE((edot - expected).cwiseAbs().maxCoeff(), 1e-10);
    }
    EXPECT_THROW(control(k, Vector::Zero(3), Vector::Zero(2), Matrix::Zero(2, 4), Vector::Zero(4)), Error);
}

TEST(GradZdot, VanishesWithoutTrackingError)
{
    const auto spec = build_constraint(Matrix{{1.0, -1.0, 0.0, 0.0}}, Vector::Zero(1));
    const Matrix Y = benchmark_regressor()(Vector{{2.0, 3.0}});
    EXPECT_EQ(grad_zdot(spec, UpdateLawConfig{0.4, 0.0, 1.0}, Y, Vector::Zero(2)).norm(), 0.0);
}

TEST(GradZdot, ScalarHandExample)
{
    const double s = 1.0 / std::sqrt(2.0);
    const auto spec = with_basis(build_constraint(Matrix{{1.0, -1.0}}, Vector::Zero(1)), Matrix{{s}, {s}});
    const Vector zdot = grad_zdot(spec, UpdateLawConfig{1.0, 0.0, 1.0}, Matrix{{1.0, 0.0}}, Vector{{1.0}});
    ASSERT_EQ(zdot.size(), 1);
    EXPECT_NEAR(zdot(0), 0.7071, 5e-5);
    EXPECT_NEAR(zdot(0), s, 1e-15);
}

TEST(GradZdot, UpdateStaysInNullSpace)
{
    std::mt19937 rng(21);
    for (int i = 0; i < 50; ++i) {
        const int p = 2 + i % 9;
        const int m = 1 + i % (p - 1);
        const auto spec = build_constraint(random_matrix(rng, m, p), random_vector(rng, m));
        const Matrix Y = random_matrix(rng, 3, p);
        const Vector e = random_vector(rng, 3);
        const Vector zdot = grad_zdot(spec, UpdateLawConfig{2.5, 0.0, 1.0}, Y, e);
        EXPECT_LE((spec.A * (spec.F * zdot)).cwiseAbs().maxCoeff(), 1e-10);
        // full-space motion is the projected raw gradient
        const Vector projected = spec.null_projector() * (2.5 * (Y.transpose() * e));
        EXPECT_LE((spec.F * zdot - projected).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(GradZdot, IsNegativeGradientOfObjective)
{
    std::mt19937 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 2 + trial % 7;
        const int m = 1 + trial % (p - 1);
        const int n = 1 + trial % 3;
        const auto spec = build_constraint(random_matrix(rng, m, p), random_vector(rng, m));
        const double gamma = 0.1 + 0.05 * trial;
        const Matrix Y = random_matrix(rng, n, p);
        const Vector e = random_vector(rng, n);
        const Vector theta = lift(spec, random_vector(rng, p - m));
        const Vector z = random_vector(rng, p - m);

        const Vector fd = central_difference_gradient(
            [&](const Vector &zz) { return gradient_objective(spec, gamma, Y, e, theta, zz); }, z, 1e-5);
        const Vector zdot = grad_zdot(spec, UpdateLawConfig{gamma, 0.0, 1.0}, Y, e);
        EXPECT_LE((zdot + fd).norm(), 1e-6 * std::max(1.0, zdot.norm())) << "trial " << trial;
    }
}

TEST(ClZdot, IsNegativeGradientOfObjectiveWithExactData)
{
    std::mt19937 rng(78);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 2 + trial % 7;
        const int m = 1 + trial % (p - 1);
        const int n = 1 + trial % 3;
        const auto spec = build_constraint(random_matrix(rng, m, p), random_vector(rng, m));
        const UpdateLawConfig cfg{0.2 + 0.01 * trial, 0.05 + 0.002 * trial, 1.0};
        const Vector theta = lift(spec, random_vector(rng, p - m));

        HistoryStack stack(6, p);
        Matrix YR = Matrix::Zero(p, p);
        for (int k = 0; k < 6; ++k) {
            const Matrix Yk = random_matrix(rng, n, p);
            const Vector uk = random_vector(rng, n);
            stack.offer(HistoryRecord{random_vector(rng, n), uk, Yk * theta + uk, Yk});
            YR += Yk.transpose() * Yk;
        }
        const Matrix Y = random_matrix(rng, n, p);
        const Vector e = random_vector(rng, n);
        const Vector z = random_vector(rng, p - m);

        const Vector fd = central_difference_gradient(
            [&](const Vector &zz) { return cl_objective(spec, cfg.gamma, cfg.k_cl, YR, Y, e, theta, zz); }, z, 1e-5);
        const Vector zdot = cl_zdot(spec, cfg, Y, e, stack, lift(spec, z));
        EXPECT_LE((zdot + fd).norm(), 1e-6 * std::max(1.0, zdot.norm())) << "trial " << trial;
    }
}

TEST(ClZdot, ReducesToGradientLawAtTrueParameters)
{
    const auto spec = build_constraint(Matrix{{0.0, -1.0, 0.0, 1.0}}, Vector::Zero(1));
    const Vector theta{{5.0, 20.0, 10.0, 20.0}};
    const auto reg = benchmark_regressor();
    HistoryStack stack(5, 4);
    std::mt19937 rng(2);
    for (int k = 0; k < 5; ++k) {
        stack.offer(exact_record(reg, theta, random_vector(rng, 2, 3.0), random_vector(rng, 2)));
    }
    const UpdateLawConfig cfg{0.05, 0.0008, 1.0};
    const Matrix Y = reg(Vector{{1.0, 2.0}});
    const Vector e{{0.3, -0.2}};
    EXPECT_LE((cl_zdot(spec, cfg, Y, e, stack, theta) - grad_zdot(spec, cfg, Y, e)).cwiseAbs().maxCoeff(), 1e-12);

    HistoryStack empty(5, 4);
    EXPECT_EQ((cl_zdot(spec, cfg, Y, e, empty, Vector{{1.0, 2.0, 3.0, 2.0}}) - grad_zdot(spec, cfg, Y, e)).norm(),
              0.0);
}

TEST(ClZdot, StackTermMatchesInformationMatrixForm)
{
    const auto spec = build_constraint(Matrix{{0.0, -1.0, 0.0, 1.0}}, Vector::Zero(1));
    const Vector theta{{5.0, 20.0, 10.0, 20.0}};
    const auto reg = benchmark_regressor();
    std::mt19937 rng(1234);
    HistoryStack stack(5, 4);
    Matrix YR = Matrix::Zero(4, 4);
    for (int k = 0; k < 5; ++k) {
        const Vector x = random_vector(rng, 2, 3.0);
        stack.offer(exact_record(reg, theta, x, random_vector(rng, 2)));
        YR += reg(x).transpose() * reg(x);
    }
    const UpdateLawConfig cfg{0.05, 0.0008, 1.0};
    const Vector w = random_vector(rng, 3, 4.0);
    const Vector theta_hat = theta - spec.F * w;
    const Vector e = Vector::Zero(2);
    const Vector stack_term = cl_zdot(spec, cfg, reg(Vector{{0.5, 0.5}}), e, stack, theta_hat);
    const Vector expected = cfg.k_cl * spec.F.transpose() * YR * spec.F * w;
    EXPECT_LE((stack_term - expected).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(HistoryStack, AppendsUntilFull)
{
    HistoryStack stack(3, 2);
    EXPECT_TRUE(stack_offer(stack, row_record(Vector{{1.0, 2.0}})));
    EXPECT_EQ(stack.size(), 1u);
    EXPECT_TRUE(stack_offer(stack, row_record(Vector{{1.0, 2.0}})));
    EXPECT_TRUE(stack_offer(stack, row_record(Vector{{0.0, 1.0}})));
    EXPECT_TRUE(stack.full());
}

TEST(HistoryStack, RejectsDuplicateOfBalancedEntries)
{
    HistoryStack stack(2, 2);
    stack.offer(row_record(Vector{{1.0, 0.0}}));
    stack.offer(row_record(Vector{{0.0, 1.0}}));
    EXPECT_DOUBLE_EQ(stack.lambda_min(), 1.0);
    EXPECT_FALSE(stack_offer(stack, row_record(Vector{{1.0, 0.0}})));
    EXPECT_FALSE(stack_offer(stack, row_record(Vector{{0.0, 1.0}})));
    EXPECT_DOUBLE_EQ(stack.lambda_min(), 1.0);
}

TEST(HistoryStack, AcceptsCandidateExcitingMissingDirection)
{
    HistoryStack stack(2, 2);
    stack.offer(row_record(Vector{{1.0, 0.0}}));
    stack.offer(row_record(Vector{{1.0, 0.0}}));
    EXPECT_NEAR(stack.lambda_min(), 0.0, 1e-15);
    EXPECT_TRUE(stack_offer(stack, row_record(Vector{{0.0, 1.0}})));
    // brute force: Y_R = diag(1, 1)
    EXPECT_NEAR(stack.lambda_min(), 1.0, 1e-14);
    EXPECT_TRUE(stack.information().isApprox(Matrix::Identity(2, 2)));
}

TEST(HistoryStack, CacheConsistentAndMonotoneUnderRandomOffers)
{
    std::mt19937 rng(99);
    HistoryStack stack(8, 4);
    double prev = 0.0;
    for (int i = 0; i < 400; ++i) {
        const Matrix Y = random_matrix(rng, 2, 4, 0.5 + (i % 7));
        stack.offer(HistoryRecord{Vector::Zero(2), Vector::Zero(2), Vector::Zero(2), Y});
        EXPECT_LE(stack.size(), 8u);
        EXPECT_LE((stack.information() - stack.recompute_information()).cwiseAbs().maxCoeff(), 1e-9);
        EXPECT_LE((stack.information() - stack.information().transpose()).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_GE(stack.lambda_min(), 0.0);
        EXPECT_GE(stack.lambda_min(), prev);
        prev = stack.lambda_min();
    }
}

TEST(FiniteExcitation, EmptyStackIsNotExcited)
{
    EXPECT_FALSE(fe_satisfied(HistoryStack(4, 2), UpdateLawConfig{1.0, 1.0, 1e-12}));
}

TEST(FiniteExcitation, ThresholdOnSmallestEigenvalue)
{
    HistoryStack stack(2, 2);
    stack.offer(row_record(Vector{{std::sqrt(2.0), 0.0}}));
    stack.offer(row_record(Vector{{0.0, std::sqrt(2.0)}}));
    EXPECT_TRUE(fe_satisfied(stack, UpdateLawConfig{1.0, 1.0, 1.0}));
    EXPECT_NEAR(stack.lambda_min(), 2.0, 1e-14);
    EXPECT_FALSE(fe_satisfied(stack, UpdateLawConfig{1.0, 1.0, 2.5}));
}
