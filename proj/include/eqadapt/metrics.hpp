#ifndef EQADAPT_METRICS_HPP
#define EQADAPT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "eqadapt/constraint.hpp"
#include "eqadapt/errors.hpp"
#include "eqadapt/format.hpp"
#include "eqadapt/laws.hpp"
#include "eqadapt/plant.hpp"
#include "eqadapt/rk4.hpp"
#include "eqadapt/scenario.hpp"
#include "eqadapt/simulation.hpp"

namespace eqadapt
{

inline constexpr double lyapunov_step_slack = 1e-9;
inline constexpr double envelope_slack = 1e-6;

/// Lyapunov diagnostics of one run.
///
/// lambda1/lambda2 bound V between lambda1 ||y||^2 and lambda2 ||y||^2 with
/// y = [e; theta_tilde]. For concurrent-learning runs the exponential bound
///   ||y(t)|| <= mu0 ||y(t_f)|| exp(-mu1 (t - t_f)),
///   mu0 = sqrt(lambda2 / lambda1),  mu1 = min(2 lambda_min(k), 2 k_cl sigma1)
/// is checked from the excitation latch time t_f on.
struct LyapunovReport {
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double mu0 = 0.0;
    double mu1 = 0.0;
    std::vector<double> V_series;

    /// V non-increasing per step within slack over the checked window
    /// (whole run for the gradient law, up to t_f for concurrent learning).
    bool V_monotone = true;
    /// Largest step increase of V divided by (1 + V), over the whole run.
    double max_V_increase = 0.0;
    /// max over t >= t_f of ||y(t)|| / bound(t); <= 1 + slack when the
    /// envelope holds. Zero for gradient runs.
    double envelope_ratio = 0.0;
    bool envelope_ok = true;
};

inline double y_norm(const LogRecord &r)
{
    return std::sqrt(r.e.squaredNorm() + r.theta_tilde.squaredNorm());
}

inline LyapunovReport lyapunov_series(const TrajectoryLog &log, double gamma)
{
    if (!(gamma > 0.0)) {
        throw Error(ErrorKind::Validation, "Lyapunov diagnostics need gamma > 0");
    }
    if (log.records.empty()) {
        throw Error(ErrorKind::Validation, "empty trajectory log");
    }
    LyapunovReport rep;
    rep.lambda1 = std::min(0.5, 1.0 / (2.0 * gamma));
    rep.lambda2 = std::max(0.5, 1.0 / (2.0 * gamma));
    rep.mu0 = std::sqrt(rep.lambda2 / rep.lambda1);

    const auto &recs = log.records;
    rep.V_series.reserve(recs.size());
    for (const auto &r : recs) {
        rep.V_series.push_back(lyapunov_value(r.e, r.theta_tilde, gamma));
    }

    const bool learning = log.law == Law::ConcurrentLearning;
    if (learning && !log.fe_latch_index) {
        throw Error(ErrorKind::MissingFE, "concurrent-learning run never reached finite excitation");
    }
    const std::size_t monotone_end = learning ? *log.fe_latch_index : recs.size() - 1;
    for (std::size_t i = 1; i < recs.size(); ++i) {
        const double prev = rep.V_series[i - 1];
        const double inc = (rep.V_series[i] - prev) / (1.0 + prev);
        rep.max_V_increase = std::max(rep.max_V_increase, inc);
        if (i <= monotone_end && inc > lyapunov_step_slack) {
            rep.V_monotone = false;
        }
    }
    rep.envelope_ok = rep.V_monotone;

    if (learning) {
        const std::size_t f = *log.fe_latch_index;
        rep.mu1 = std::min(2.0 * log.k_min, 2.0 * log.k_cl * log.sigma1);
        const double tf = recs[f].t;
        const double y0 = y_norm(recs[f]);
        bool inside = true;
        for (std::size_t i = f; i < recs.size(); ++i) {
            const double bound = rep.mu0 * y0 * std::exp(-rep.mu1 * (recs[i].t - tf));
            const double y = y_norm(recs[i]);
            if (y > bound * (1.0 + envelope_slack)) {
                inside = false;
            }
            if (bound > 0.0) {
                rep.envelope_ratio = std::max(rep.envelope_ratio, y / bound);
            } else if (y > 0.0) {
                rep.envelope_ratio = std::numeric_limits<double>::infinity();
            }
        }
        rep.envelope_ok = rep.envelope_ok && inside;
    }
    return rep;
}

/// theta_hat(t) from the full-dimension integration.
struct OracleTrajectory {
    std::vector<double> t;
    std::vector<Vector> theta_hat;
    std::optional<std::size_t> fe_latch_index;
};

/// Integrates the same closed loop with the estimate carried directly in
/// R^p instead of through z:
///   theta_hat_dot = F F^T (gamma Y^T e + k_cl sum_k Y_k^T (xdot_hat_k - u_k - Y_k theta_hat))
/// using the same RK4 grid and the same sampling schedule.
inline OracleTrajectory oracle_full_dimension(const ScenarioConfig &scenario)
{
    validate(scenario);
    const ConstraintSpec spec = build_constraint(scenario.A, scenario.d);
    const Matrix projector = spec.F * spec.F.transpose();
    const Regressor regressor = scenario.make_regressor();
    const DesiredTrajectory trajectory = scenario.make_trajectory();
    const Vector &theta = scenario.theta_true;
    const Vector &gains = scenario.k;
    const auto n = regressor.states();
    const auto p = regressor.params();
    const double dt = scenario.solver.dt;
    const bool learning = scenario.law == Law::ConcurrentLearning;

    HistoryStack stack(scenario.stack.capacity, p, scenario.stack.rel_improve_tol);
    bool latched = false;

    auto input = [&](double t, const Vector &x, const Vector &th) {
        const DesiredPoint des = trajectory(t);
        const Matrix Y = regressor(x);
        const Vector e = x - des.xd;
        return std::pair<Vector, Vector>{des.xd_dot - Y * th - gains.cwiseProduct(e), e};
    };

    auto field = [&](double t, const Vector &y) {
        const Vector x = y.head(n);
        const Vector th = y.tail(p);
        const Matrix Y = regressor(x);
        const auto [u, e] = input(t, x, th);
        Vector raw = scenario.gamma * (Y.transpose() * e);
        if (latched && scenario.k_cl != 0.0) {
            for (const auto &r : stack.entries()) {
                raw += scenario.k_cl * (r.Y.transpose() * (r.xdot_hat - r.u - r.Y * th));
            }
        }
        Vector dy(n + p);
        dy << Y * theta + u, projector * raw;
        return dy;
    };

    OracleTrajectory out;
    const std::size_t samples = scenario.sample_count();
    out.t.reserve(samples);
    out.theta_hat.reserve(samples);

    Vector y(n + p);
    y << scenario.x0, (scenario.theta_hat0.size() == 0 ? spec.theta0 : scenario.theta_hat0);
    std::vector<Vector> xs{scenario.x0};
    std::vector<Vector> us{input(0.0, scenario.x0, y.tail(p)).first};
    out.t.push_back(0.0);
    out.theta_hat.push_back(y.tail(p));

    for (std::size_t i = 0; i + 1 < samples; ++i) {
        const double t = static_cast<double>(i) * dt;
        y = rk4_step(field, t, y, dt);
        const double t_next = static_cast<double>(i + 1) * dt;
        if (!detail::within_guard(y, scenario.solver.overflow_guard)) {
            throw Error(ErrorKind::Diverged, "oracle integration diverged at t = " + std::to_string(t_next));
        }
        xs.push_back(y.head(n));
        us.push_back(input(t_next, xs.back(), y.tail(p)).first);

        if (learning && i >= 1 && i % scenario.stack.cadence == 0) {
            HistoryRecord rec{xs[i], us[i], (xs[i + 1] - xs[i - 1]) / (2.0 * dt), regressor(xs[i])};
            stack.offer(std::move(rec));
            if (!latched && fe_satisfied(stack, UpdateLawConfig{scenario.gamma, scenario.k_cl,
                                                                scenario.stack.sigma1_threshold})) {
                latched = true;
                out.fe_latch_index = i + 1;
            }
        }
        out.t.push_back(t_next);
        out.theta_hat.push_back(y.tail(p));
    }
    return out;
}

/// max over the grid of ||theta_hat_reduced - theta_hat_full||_inf
inline double max_oracle_deviation(const TrajectoryLog &log, const OracleTrajectory &oracle)
{
    if (log.records.size() != oracle.theta_hat.size()) {
        throw Error(ErrorKind::Dimension, "oracle and reduced runs have different grids");
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < oracle.theta_hat.size(); ++i) {
        worst = std::max(worst, (log.records[i].theta_hat - oracle.theta_hat[i]).cwiseAbs().maxCoeff());
    }
    return worst;
}

struct RunSummary {
    std::string scenario;
    std::string law;
    std::size_t steps = 0;
    double horizon = 0.0;
    double dt = 0.0;
    double final_error_norm = 0.0;
    double initial_error_norm = 0.0;
    double final_theta_tilde_norm = 0.0;
    double max_constraint_violation = 0.0;
    std::optional<double> fe_latch_time;
    double sigma1 = 0.0;
    double final_lambda_min = 0.0;
    double max_derivative_error = 0.0;
    std::optional<double> mu0;
    std::optional<double> mu1;
    std::optional<bool> envelope_ok;
    std::optional<double> oracle_max_deviation;
    double runtime_seconds = 0.0;

    /// Ordered key/value pairs; absent optionals are written as "none".
    std::vector<std::pair<std::string, std::string>> fields() const;
};

inline RunSummary summary(const TrajectoryLog &log, const LyapunovReport *report = nullptr)
{
    RunSummary s;
    s.scenario = log.scenario;
    s.law = to_string(log.law);
    s.steps = log.records.empty() ? 0 : log.records.size() - 1;
    s.dt = log.dt;
    if (!log.records.empty()) {
        const LogRecord &first = log.records.front();
        const LogRecord &last = log.records.back();
        s.horizon = last.t;
        s.initial_error_norm = first.e.norm();
        s.final_error_norm = last.e.norm();
        s.final_theta_tilde_norm = last.theta_tilde.norm();
        s.final_lambda_min = last.lambda_min;
        for (const auto &r : log.records) {
            s.max_constraint_violation = std::max(s.max_constraint_violation, r.constraint_violation);
        }
    }
    s.fe_latch_time = log.fe_latch_time();
    s.sigma1 = log.sigma1;
    s.max_derivative_error = log.max_derivative_error;
    s.runtime_seconds = log.runtime_seconds;
    if (report) {
        s.mu0 = report->mu0;
        if (log.law == Law::ConcurrentLearning) {
            s.mu1 = report->mu1;
        }
        s.envelope_ok = report->envelope_ok;
    }
    return s;
}

inline std::vector<std::pair<std::string, std::string>> RunSummary::fields() const
{
    auto num = [](std::optional<double> v) { return v ? format_double(*v) : std::string("none"); };
    auto flag = [](std::optional<bool> v) { return v ? std::string(*v ? "true" : "false") : std::string("none"); };
    return {
        {"scenario", scenario},
        {"law", law},
        {"steps", std::to_string(steps)},
        {"dt", format_double(dt)},
        {"horizon", format_double(horizon)},
        {"initial_error_norm", format_double(initial_error_norm)},
        {"final_error_norm", format_double(final_error_norm)},
        {"final_theta_tilde_norm", format_double(final_theta_tilde_norm)},
        {"max_constraint_violation", format_double(max_constraint_violation)},
        {"fe_latch_time", num(fe_latch_time)},
        {"sigma1", format_double(sigma1)},
        {"final_lambda_min", format_double(final_lambda_min)},
        {"max_derivative_error", format_double(max_derivative_error)},
        {"mu0", num(mu0)},
        {"mu1", num(mu1)},
        {"envelope_ok", flag(envelope_ok)},
        {"oracle_max_deviation", num(oracle_max_deviation)},
        {"runtime_seconds", format_double(runtime_seconds)},
    };
}

} // namespace eqadapt

#endif
