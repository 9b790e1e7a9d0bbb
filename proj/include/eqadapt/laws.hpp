#ifndef EQADAPT_LAWS_HPP
#define EQADAPT_LAWS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqadapt/constraint.hpp"
#include "eqadapt/errors.hpp"

namespace eqadapt
{

/// Diagonal feedback gain k = diag(gains).
struct ControllerConfig {
    Vector gains;

    double min_gain() const { return gains.minCoeff(); }
};

struct UpdateLawConfig {
    double gamma = 1.0;
    double k_cl = 0.0;
    double sigma1_threshold = 1.0;
};

/// u = xd_dot - Y theta_hat - k e
inline Vector control(const ControllerConfig &cfg, const Vector &e, const Vector &xd_dot, const Matrix &Y,
                      const Vector &theta_hat)
{
    const auto n = e.size();
    detail::require_dim(cfg.gains.size() == n && xd_dot.size() == n && Y.rows() == n,
                        "controller inputs must share the state dimension");
    detail::require_dim(Y.cols() == theta_hat.size(), "regressor columns must match parameter length");
    return xd_dot - Y * theta_hat - cfg.gains.cwiseProduct(e);
}

/// Reduced gradient law: zdot = gamma F^T Y^T e
inline Vector grad_zdot(const ConstraintSpec &spec, const UpdateLawConfig &cfg, const Matrix &Y, const Vector &e)
{
    detail::require_dim(Y.cols() == spec.params(), "regressor columns must match constraint parameter count");
    detail::require_dim(Y.rows() == e.size(), "regressor rows must match tracking error length");
    return cfg.gamma * (spec.F.transpose() * (Y.transpose() * e));
}

/// One recorded sample: state, applied input, derivative estimate and the
/// regressor evaluated at the state.
struct HistoryRecord {
    Vector x;
    Vector u;
    Vector xdot_hat;
    Matrix Y;
};

/// Fixed-capacity store of recorded samples with the information matrix
/// Y_R = sum Y_k^T Y_k and its smallest eigenvalue cached.
///
/// Once full, a candidate replaces the slot that maximizes the resulting
/// lambda_min, and only if that strictly improves on the current value, so
/// lambda_min never decreases over the life of the stack.
class HistoryStack
{
public:
    HistoryStack(std::size_t capacity, Eigen::Index params, double rel_improve_tol = 1e-6)
        : capacity_(capacity), rel_improve_tol_(rel_improve_tol), info_(Matrix::Zero(params, params))
    {
        if (capacity == 0) {
            throw Error(ErrorKind::Validation, "history stack capacity must be positive");
        }
    }

    std::size_t capacity() const noexcept { return capacity_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    bool full() const noexcept { return entries_.size() == capacity_; }
    Eigen::Index params() const noexcept { return info_.rows(); }

    const std::vector<HistoryRecord> &entries() const noexcept { return entries_; }
    const Matrix &information() const noexcept { return info_; }
    double lambda_min() const noexcept { return lambda_min_; }

    bool offer(HistoryRecord candidate)
    {
        detail::require_dim(candidate.Y.cols() == params(), "record regressor has the wrong parameter count");
        detail::require_dim(candidate.Y.rows() == candidate.u.size() && candidate.u.size() == candidate.xdot_hat.size(),
                            "record input, derivative and regressor rows must agree");

        if (!full()) {
            entries_.push_back(std::move(candidate));
            refresh();
            return true;
        }

        const Matrix gain = candidate.Y.transpose() * candidate.Y;
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_slot = 0;
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            const Matrix &Yi = entries_[i].Y;
            const double lam = min_eigenvalue(info_ - Yi.transpose() * Yi + gain);
            if (lam > best) {
                best = lam;
                best_slot = i;
            }
        }
        if (!(best > lambda_min_ + improvement_floor())) {
            return false;
        }
        const double before = lambda_min_;
        HistoryRecord displaced = std::move(entries_[best_slot]);
        entries_[best_slot] = std::move(candidate);
        refresh();
        if (lambda_min_ < before) {
            // recomputation rounding undid a marginal gain
            entries_[best_slot] = std::move(displaced);
            refresh();
            return false;
        }
        return true;
    }

    /// Y_R recomputed from scratch, for cache-consistency checks.
    Matrix recompute_information() const
    {
        Matrix info = Matrix::Zero(params(), params());
        for (const auto &r : entries_) {
            info.noalias() += r.Y.transpose() * r.Y;
        }
        return info;
    }

    static double min_eigenvalue(const Matrix &sym)
    {
        Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
        return eig.eigenvalues()(0);
    }

private:
    double improvement_floor() const
    {
        const double scale = std::max(1.0, info_.trace()) * std::numeric_limits<double>::epsilon() *
                             static_cast<double>(params());
        return rel_improve_tol_ * std::max(std::fabs(lambda_min_), scale);
    }

    void refresh()
    {
        info_ = recompute_information();
        lambda_min_ = std::max(0.0, min_eigenvalue(info_));
    }

    std::size_t capacity_;
    double rel_improve_tol_;
    std::vector<HistoryRecord> entries_;
    Matrix info_;
    double lambda_min_ = 0.0;
};

inline bool stack_offer(HistoryStack &stack, HistoryRecord candidate)
{
    return stack.offer(std::move(candidate));
}

/// Finite excitation holds once lambda_min(Y_R) reaches the threshold; the
/// effective sigma1 is then stack.lambda_min().
inline bool fe_satisfied(const HistoryStack &stack, const UpdateLawConfig &cfg)
{
    return !stack.empty() && stack.lambda_min() >= cfg.sigma1_threshold;
}

/// sum_k Y_k^T (xdot_hat_k - u_k - Y_k theta_hat), in parameter space.
inline Vector stack_residual_sum(const HistoryStack &stack, const Vector &theta_hat)
{
    detail::require_dim(theta_hat.size() == stack.params(), "parameter estimate does not match stack");
    Vector sum = Vector::Zero(stack.params());
    for (const auto &r : stack.entries()) {
        sum.noalias() += r.Y.transpose() * (r.xdot_hat - r.u - r.Y * theta_hat);
    }
    return sum;
}

/// Reduced concurrent-learning law:
///   zdot = gamma F^T Y^T e + k_cl F^T sum_k Y_k^T (xdot_hat_k - u_k - Y_k theta_hat)
inline Vector cl_zdot(const ConstraintSpec &spec, const UpdateLawConfig &cfg, const Matrix &Y, const Vector &e,
                      const HistoryStack &stack, const Vector &theta_hat)
{
    Vector zdot = grad_zdot(spec, cfg, Y, e);
    if (!stack.empty() && cfg.k_cl != 0.0) {
        detail::require_dim(stack.params() == spec.params(), "history stack parameter count does not match");
        zdot.noalias() += cfg.k_cl * (spec.F.transpose() * stack_residual_sum(stack, theta_hat));
    }
    return zdot;
}

} // namespace eqadapt

#endif
