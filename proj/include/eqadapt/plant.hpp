#ifndef EQADAPT_PLANT_HPP
#define EQADAPT_PLANT_HPP

#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eqadapt/constraint.hpp"
#include "eqadapt/errors.hpp"
#include "eqadapt/expression.hpp"

namespace eqadapt
{

/// Y(x) in the linearly parametrized drift f(x) = Y(x) theta.
class Regressor
{
public:
    using Fn = std::function<Matrix(const Vector &)>;

    Regressor() = default;
    Regressor(Eigen::Index n, Eigen::Index p, Fn fn, std::string name = {})
        : n_(n), p_(p), fn_(std::move(fn)), name_(std::move(name))
    {
    }

    Eigen::Index states() const noexcept { return n_; }
    Eigen::Index params() const noexcept { return p_; }
    const std::string &name() const noexcept { return name_; }

    Matrix operator()(const Vector &x) const
    {
        detail::require_dim(x.size() == n_, "regressor expects a state of length " + std::to_string(n_));
        Matrix Y = fn_(x);
        detail::require_dim(Y.rows() == n_ && Y.cols() == p_, "regressor returned a matrix of the wrong shape");
        return Y;
    }

private:
    Eigen::Index n_ = 0;
    Eigen::Index p_ = 0;
    Fn fn_;
    std::string name_;
};

struct PlantConfig {
    Regressor regressor;
    Vector theta_true;
    Vector x0;
};

/// Desired state and its exact time derivative.
struct DesiredPoint {
    Vector xd;
    Vector xd_dot;
};

class DesiredTrajectory
{
public:
    using Fn = std::function<DesiredPoint(double)>;

    DesiredTrajectory() = default;
    DesiredTrajectory(Eigen::Index n, Fn fn, std::string name = {}) : n_(n), fn_(std::move(fn)), name_(std::move(name))
    {
    }

    Eigen::Index states() const noexcept { return n_; }
    const std::string &name() const noexcept { return name_; }

    DesiredPoint operator()(double t) const { return fn_(t); }

private:
    Eigen::Index n_ = 0;
    Fn fn_;
    std::string name_;
};

/// Two-state, four-parameter benchmark:
///   Y(x) = [x1^2  sin(x2)     0   0    ]
///          [0     x2 sin(x1)  x1  x1*x2]
inline Regressor benchmark_regressor()
{
    return Regressor(
        2, 4,
        [](const Vector &x) {
            Matrix Y = Matrix::Zero(2, 4);
            Y(0, 0) = x(0) * x(0);
            Y(0, 1) = std::sin(x(1));
            Y(1, 1) = x(1) * std::sin(x(0));
            Y(1, 2) = x(0);
            Y(1, 3) = x(0) * x(1);
            return Y;
        },
        "benchmark");
}

/// Coefficients of the benchmark reference
///   x_d(t) = amplitude (1 - e^{-rate t}) [sin(w1 t); c2 cos(w2 t)]
struct BenchmarkTrajectoryCoefficients {
    double amplitude = 10.0;
    double rate = 0.1;
    double w1 = 2.0;
    double c2 = 0.4;
    double w2 = 3.0;
};

inline DesiredTrajectory benchmark_trajectory(BenchmarkTrajectoryCoefficients c = {})
{
    return DesiredTrajectory(
        2,
        [c](double t) {
            const double decay = std::exp(-c.rate * t);
            const double ramp = c.amplitude * (1.0 - decay);
            const double ramp_dot = c.amplitude * c.rate * decay;
            const double s = std::sin(c.w1 * t);
            const double q = c.c2 * std::cos(c.w2 * t);
            DesiredPoint p{Vector(2), Vector(2)};
            p.xd << ramp * s, ramp * q;
            p.xd_dot << ramp_dot * s + ramp * c.w1 * std::cos(c.w1 * t),
                ramp_dot * q - ramp * c.c2 * c.w2 * std::sin(c.w2 * t);
            return p;
        },
        "benchmark");
}

/// Regressor whose entries are expressions in x1..xn.
inline Regressor expression_regressor(const std::vector<std::vector<std::string>> &entries)
{
    const auto n = static_cast<Eigen::Index>(entries.size());
    if (n == 0 || entries.front().empty()) {
        throw Error(ErrorKind::Validation, "inline regressor must have at least one row and column");
    }
    const auto p = static_cast<Eigen::Index>(entries.front().size());
    std::vector<std::string> vars;
    for (Eigen::Index i = 0; i < n; ++i) {
        vars.push_back("x" + std::to_string(i + 1));
    }
    std::vector<Expression> cells;
    for (const auto &row : entries) {
        if (static_cast<Eigen::Index>(row.size()) != p) {
            throw Error(ErrorKind::Validation, "inline regressor rows must all have the same length");
        }
        for (const auto &src : row) {
            cells.emplace_back(src, vars);
        }
    }
    return Regressor(
        n, p,
        [n, p, cells = std::move(cells)](const Vector &x) {
            Matrix Y(n, p);
            const std::span<const double> vars(x.data(), static_cast<std::size_t>(x.size()));
            for (Eigen::Index i = 0; i < n; ++i) {
                for (Eigen::Index j = 0; j < p; ++j) {
                    Y(i, j) = cells[static_cast<std::size_t>(i * p + j)](vars);
                }
            }
            return Y;
        },
        "inline");
}

/// Trajectory given as expressions in t for x_d and its derivative.
inline DesiredTrajectory expression_trajectory(const std::vector<std::string> &xd,
                                               const std::vector<std::string> &xd_dot)
{
    if (xd.empty() || xd.size() != xd_dot.size()) {
        throw Error(ErrorKind::Validation, "inline trajectory needs matching non-empty xd and xd_dot lists");
    }
    const std::vector<std::string> vars{"t"};
    std::vector<Expression> pos, vel;
    for (std::size_t i = 0; i < xd.size(); ++i) {
        pos.emplace_back(xd[i], vars);
        vel.emplace_back(xd_dot[i], vars);
    }
    const auto n = static_cast<Eigen::Index>(xd.size());
    return DesiredTrajectory(
        n,
        [n, pos = std::move(pos), vel = std::move(vel)](double t) {
            DesiredPoint p{Vector(n), Vector(n)};
            const double args[1] = {t};
            for (Eigen::Index i = 0; i < n; ++i) {
                p.xd(i) = pos[static_cast<std::size_t>(i)](args);
                p.xd_dot(i) = vel[static_cast<std::size_t>(i)](args);
            }
            return p;
        },
        "inline");
}

/// xdot = Y(x) theta + u
inline Vector plant_rhs(const PlantConfig &plant, const Vector &x, const Vector &u)
{
    detail::require_dim(u.size() == plant.regressor.states(), "input length must equal state dimension");
    detail::require_dim(plant.theta_true.size() == plant.regressor.params(),
                        "true parameter vector length does not match regressor");
    return plant.regressor(x) * plant.theta_true + u;
}

} // namespace eqadapt

#endif
