#ifndef EQADAPT_SIMULATION_HPP
#define EQADAPT_SIMULATION_HPP

#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqadapt/constraint.hpp"
#include "eqadapt/errors.hpp"
#include "eqadapt/laws.hpp"
#include "eqadapt/plant.hpp"
#include "eqadapt/rk4.hpp"
#include "eqadapt/scenario.hpp"

namespace eqadapt
{

/// V = e^T e / 2 + theta_tilde^T theta_tilde / (2 gamma). With gamma = 0
/// (adaptation switched off) the parameter term is only finite when the
/// estimate is exact.
inline double lyapunov_value(const Vector &e, const Vector &theta_tilde, double gamma)
{
    const double tracking = 0.5 * e.squaredNorm();
    const double param_sq = theta_tilde.squaredNorm();
    if (gamma > 0.0) {
        return tracking + param_sq / (2.0 * gamma);
    }
    return param_sq == 0.0 ? tracking : std::numeric_limits<double>::infinity();
}

struct ClosedLoopState {
    double t = 0.0;
    Vector x;
    Vector z;
};

struct ClosedLoopDerivative {
    Vector x_dot;
    Vector z_dot;
};

/// The materialized pieces of a scenario that the integrator needs.
struct ClosedLoopModel {
    ConstraintSpec constraint;
    PlantConfig plant;
    DesiredTrajectory trajectory;
    ControllerConfig controller;
    UpdateLawConfig law;

    static ClosedLoopModel from(const ScenarioConfig &s)
    {
        validate(s, false);
        return ClosedLoopModel{build_constraint(s.A, s.d), s.make_plant(), s.make_trajectory(),
                               ControllerConfig{s.k},
                               UpdateLawConfig{s.gamma, s.k_cl, s.stack.sigma1_threshold}};
    }
};

/// Instantaneous signals at one (t, x, z).
struct ClosedLoopSignals {
    DesiredPoint desired;
    Vector e;
    Matrix Y;
    Vector theta_hat;
    Vector u;
};

inline ClosedLoopSignals evaluate_signals(const ClosedLoopModel &m, double t, const Vector &x, const Vector &z)
{
    ClosedLoopSignals s;
    s.desired = m.trajectory(t);
    s.e = x - s.desired.xd;
    s.Y = m.plant.regressor(x);
    s.theta_hat = lift(m.constraint, z);
    s.u = control(m.controller, s.e, s.desired.xd_dot, s.Y, s.theta_hat);
    return s;
}

/// Composite right-hand side. `stack` is the active concurrent-learning
/// stack, or null while only the gradient law runs.
inline ClosedLoopDerivative rhs(const ClosedLoopModel &m, const ClosedLoopState &state, const HistoryStack *stack)
{
    const ClosedLoopSignals s = evaluate_signals(m, state.t, state.x, state.z);
    ClosedLoopDerivative d;
    d.x_dot = s.Y * m.plant.theta_true + s.u;
    d.z_dot = stack ? cl_zdot(m.constraint, m.law, s.Y, s.e, *stack, s.theta_hat)
                    : grad_zdot(m.constraint, m.law, s.Y, s.e);
    return d;
}

struct LogRecord {
    double t = 0.0;
    Vector x;
    Vector xd;
    Vector e;
    Vector u;
    Vector theta_hat;
    Vector theta_tilde;
    double constraint_violation = 0.0;
    double V = 0.0;
    double lambda_min = 0.0;
    bool fe_flag = false;
};

struct TrajectoryLog {
    std::string scenario;
    Law law = Law::Gradient;
    double dt = 0.0;
    double gamma = 0.0;
    double k_cl = 0.0;
    double k_min = 0.0;
    std::vector<LogRecord> records;

    /// Index of the first record at which the concurrent-learning term is
    /// active, if finite excitation was reached.
    std::optional<std::size_t> fe_latch_index;
    double sigma1 = 0.0;

    std::size_t stack_offers = 0;
    std::size_t stack_accepts = 0;
    /// max ||xdot_hat_k - xdot_k|| over recorded samples.
    double max_derivative_error = 0.0;
    double runtime_seconds = 0.0;

    std::optional<double> fe_latch_time() const
    {
        if (!fe_latch_index) {
            return std::nullopt;
        }
        return records[*fe_latch_index].t;
    }
};

namespace detail
{

inline bool within_guard(const Vector &v, double guard)
{
    return v.allFinite() && (v.size() == 0 || v.cwiseAbs().maxCoeff() <= guard);
}

inline Vector pack(const ClosedLoopState &s)
{
    Vector y(s.x.size() + s.z.size());
    y << s.x, s.z;
    return y;
}

} // namespace detail

/// Fixed-step RK4 integration of the scenario from t = 0 to the horizon.
///
/// Concurrent-learning scenarios record a sample every `cadence` steps,
/// estimating xdot by a central difference of the neighbouring logged
/// states. The gradient law runs until the stack first satisfies the
/// excitation threshold; from then on the stack term stays enabled.
inline TrajectoryLog run(const ScenarioConfig &scenario)
{
    const auto started = std::chrono::steady_clock::now();
    const ClosedLoopModel model = ClosedLoopModel::from(scenario);
    const auto n = model.plant.regressor.states();
    const auto q = model.constraint.reduced_dim();
    const double dt = scenario.solver.dt;
    const double guard = scenario.solver.overflow_guard;
    const bool learning = scenario.law == Law::ConcurrentLearning;

    ClosedLoopState state;
    state.t = 0.0;
    state.x = scenario.x0;
    state.z = scenario.theta_hat0.size() == 0 ? Vector(Vector::Zero(q)) : retract(model.constraint, scenario.theta_hat0);

    TrajectoryLog log;
    log.scenario = scenario.name;
    log.law = scenario.law;
    log.dt = dt;
    log.gamma = scenario.gamma;
    log.k_cl = scenario.k_cl;
    log.k_min = model.controller.min_gain();

    const std::size_t samples = scenario.sample_count();
    log.records.reserve(samples);

    HistoryStack stack(scenario.stack.capacity, model.constraint.params(), scenario.stack.rel_improve_tol);
    bool latched = false;

    auto record = [&](const ClosedLoopState &s) {
        const ClosedLoopSignals sig = evaluate_signals(model, s.t, s.x, s.z);
        LogRecord r;
        r.t = s.t;
        r.x = s.x;
        r.xd = sig.desired.xd;
        r.e = sig.e;
        r.u = sig.u;
        r.theta_hat = sig.theta_hat;
        r.theta_tilde = model.plant.theta_true - sig.theta_hat;
        r.constraint_violation = violation(model.constraint, sig.theta_hat);
        r.V = lyapunov_value(r.e, r.theta_tilde, scenario.gamma);
        r.lambda_min = stack.lambda_min();
        r.fe_flag = latched;
        log.records.push_back(std::move(r));
    };

    auto field = [&](double t, const Vector &y) {
        const ClosedLoopState s{t, y.head(n), y.tail(q)};
        const ClosedLoopDerivative d = rhs(model, s, latched ? &stack : nullptr);
        Vector dy(n + q);
        dy << d.x_dot, d.z_dot;
        return dy;
    };

    record(state);
    Vector y = detail::pack(state);
    for (std::size_t i = 0; i + 1 < samples; ++i) {
        y = rk4_step(field, state.t, y, dt);
        state.t = static_cast<double>(i + 1) * dt;
        state.x = y.head(n);
        state.z = y.tail(q);
        if (!detail::within_guard(y, guard)) {
            throw Error(ErrorKind::Diverged,
                        "closed-loop state left the overflow guard at t = " + std::to_string(state.t));
        }

        // sample i has both neighbours logged once step i -> i+1 is done
        if (learning && i >= 1 && i % scenario.stack.cadence == 0) {
            const LogRecord &mid = log.records[i];
            HistoryRecord cand;
            cand.x = mid.x;
            cand.u = mid.u;
            cand.xdot_hat = (state.x - log.records[i - 1].x) / (2.0 * dt);
            cand.Y = model.plant.regressor(mid.x);
            const Vector xdot_exact = cand.Y * model.plant.theta_true + cand.u;
            const double err = (cand.xdot_hat - xdot_exact).norm();
            ++log.stack_offers;
            if (stack.offer(std::move(cand))) {
                ++log.stack_accepts;
                log.max_derivative_error = std::max(log.max_derivative_error, err);
            }
            if (!latched && fe_satisfied(stack, model.law)) {
                latched = true;
                log.fe_latch_index = i + 1;
                log.sigma1 = stack.lambda_min();
            }
        }
        record(state);
    }

    log.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return log;
}

} // namespace eqadapt

#endif
