#ifndef EQADAPT_CONSTRAINT_HPP
#define EQADAPT_CONSTRAINT_HPP

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "eqadapt/errors.hpp"

namespace eqadapt
{

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Affine equality constraint A*theta = d together with its elimination:
/// every feasible theta is theta0 + F*z for a unique z.
///
/// theta0 is the minimum-norm feasible point, F has orthonormal columns
/// spanning N(A) and range_basis has orthonormal columns spanning R(A^T).
/// kappa1/kappa2 are the extreme eigenvalues of A*A^T.
struct ConstraintSpec {
    Matrix A;
    Vector d;
    Vector theta0;
    Matrix F;
    Matrix range_basis;
    double kappa1 = 0.0;
    double kappa2 = 0.0;

    Eigen::Index constraints() const { return A.rows(); }
    Eigen::Index params() const { return A.cols(); }
    Eigen::Index reduced_dim() const { return F.cols(); }

    /// Orthonormal projector onto N(A).
    Matrix null_projector() const { return F * F.transpose(); }
};

inline constexpr double default_rank_tol = 1e-10;
inline constexpr double default_feas_tol = 1e-8;

/// Largest absolute entry of A*theta - d.
inline double violation(const ConstraintSpec &spec, const Vector &theta)
{
    detail::require_dim(theta.size() == spec.params(), "parameter vector length does not match constraint");
    return (spec.A * theta - spec.d).cwiseAbs().maxCoeff();
}

/// Residuals of the structural invariants, all of which should be ~0.
struct ConstraintResiduals {
    double particular = 0.0;  // max |A theta0 - d|
    double null_space = 0.0;  // max |A F|
    double orthonormal = 0.0; // max |F^T F - I|
    double range_orthonormal = 0.0;
};

inline ConstraintResiduals residuals(const ConstraintSpec &spec)
{
    ConstraintResiduals r;
    r.particular = violation(spec, spec.theta0);
    r.null_space = spec.F.size() == 0 ? 0.0 : (spec.A * spec.F).cwiseAbs().maxCoeff();
    const auto q = spec.reduced_dim();
    r.orthonormal = (spec.F.transpose() * spec.F - Matrix::Identity(q, q)).cwiseAbs().maxCoeff();
    const auto m = spec.range_basis.cols();
    r.range_orthonormal =
        (spec.range_basis.transpose() * spec.range_basis - Matrix::Identity(m, m)).cwiseAbs().maxCoeff();
    return r;
}

/// Builds the elimination from an SVD of A. F is the trailing p-m right
/// singular vectors; the leading m span R(A^T).
inline ConstraintSpec build_constraint(const Matrix &A, const Vector &d, double rank_tol = default_rank_tol)
{
    const auto m = A.rows();
    const auto p = A.cols();
    if (m < 1 || p <= m) {
        throw Error(ErrorKind::Dimension, "constraint matrix must be m x p with 1 <= m < p, got " +
                                              std::to_string(m) + " x " + std::to_string(p));
    }
    detail::require_dim(d.size() == m, "constraint offset d must have length " + std::to_string(m));
    if (!A.allFinite() || !d.allFinite()) {
        throw Error(ErrorKind::Validation, "constraint entries must be finite");
    }
    if (!(rank_tol > 0.0)) {
        throw Error(ErrorKind::Validation, "rank_tol must be positive");
    }

    Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeFullV);
    const Vector &sv = svd.singularValues();
    const double sigma_max = sv(0);
    if (!(sigma_max > 0.0) || sv(m - 1) < rank_tol * sigma_max) {
        throw Error(ErrorKind::RankDeficient, "constraint matrix has numerical row rank < " + std::to_string(m));
    }

    ConstraintSpec spec;
    spec.A = A;
    spec.d = d;
    spec.range_basis = svd.matrixV().leftCols(m);
    spec.F = svd.matrixV().rightCols(p - m);

    const Matrix gram = A * A.transpose();
    spec.theta0 = A.transpose() * gram.llt().solve(d);

    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
    spec.kappa1 = eig.eigenvalues().minCoeff();
    spec.kappa2 = eig.eigenvalues().maxCoeff();
    return spec;
}

/// Replaces the null-space basis with a caller-supplied one, e.g. a
/// hand-picked basis. It must be orthonormal and lie in N(A) to within tol.
inline ConstraintSpec with_basis(ConstraintSpec spec, const Matrix &F, double tol = 1e-10)
{
    detail::require_dim(F.rows() == spec.params() && F.cols() == spec.reduced_dim(),
                        "null-space basis must be " + std::to_string(spec.params()) + " x " +
                            std::to_string(spec.reduced_dim()));
    const auto q = F.cols();
    const double ortho = (F.transpose() * F - Matrix::Identity(q, q)).cwiseAbs().maxCoeff();
    const double null = (spec.A * F).cwiseAbs().maxCoeff();
    if (ortho > tol || null > tol) {
        throw Error(ErrorKind::Validation, "supplied basis is not an orthonormal basis of N(A)");
    }
    spec.F = F;
    return spec;
}

/// theta_hat = theta0 + F z
inline Vector lift(const ConstraintSpec &spec, const Vector &z)
{
    detail::require_dim(z.size() == spec.reduced_dim(),
                        "reduced coordinate must have length " + std::to_string(spec.reduced_dim()));
    return spec.theta0 + spec.F * z;
}

/// z = F^T (theta_hat - theta0). theta_hat must already be feasible.
inline Vector retract(const ConstraintSpec &spec, const Vector &theta_hat, double feas_tol = default_feas_tol)
{
    detail::require_dim(theta_hat.size() == spec.params(),
                        "parameter estimate must have length " + std::to_string(spec.params()));
    const double viol = violation(spec, theta_hat);
    if (!(viol <= feas_tol)) {
        throw Error(ErrorKind::InfeasibleInitialEstimate,
                    "initial estimate violates A*theta = d by " + std::to_string(viol));
    }
    return spec.F.transpose() * (theta_hat - spec.theta0);
}

} // namespace eqadapt

#endif
