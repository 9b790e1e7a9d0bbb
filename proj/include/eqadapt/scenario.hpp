#ifndef EQADAPT_SCENARIO_HPP
#define EQADAPT_SCENARIO_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "eqadapt/constraint.hpp"
#include "eqadapt/errors.hpp"
#include "eqadapt/plant.hpp"

namespace eqadapt
{

enum class Law { Gradient, ConcurrentLearning };

inline const char *to_string(Law law)
{
    return law == Law::Gradient ? "gradient" : "concurrent_learning";
}

inline Law law_from_string(const std::string &s)
{
    if (s == "gradient") {
        return Law::Gradient;
    }
    if (s == "concurrent_learning") {
        return Law::ConcurrentLearning;
    }
    throw Error(ErrorKind::Validation, "law must be 'gradient' or 'concurrent_learning', got '" + s + "'");
}

struct SolverSettings {
    double dt = 1e-3;
    double horizon = 20.0;
    double overflow_guard = 1e9;
};

struct StackSettings {
    std::size_t capacity = 20;
    std::size_t cadence = 10;
    double sigma1_threshold = 10.0;
    double rel_improve_tol = 1e-6;
};

/// Everything needed to reproduce one closed-loop run. The plant and
/// trajectory are kept in their serializable form (a built-in name or
/// inline expressions) and materialized with make_regressor() and
/// make_trajectory().
struct ScenarioConfig {
    std::string name;

    std::string plant = "benchmark"; // "benchmark" or "inline"
    std::vector<std::vector<std::string>> regressor_entries;
    Vector theta_true;
    Vector x0;

    Matrix A;
    Vector d;

    Law law = Law::Gradient;
    Vector k;
    double gamma = 1.0;
    double k_cl = 0.0;

    /// Empty means start from the minimum-norm feasible point (z = 0).
    Vector theta_hat0;

    std::string trajectory = "benchmark"; // "benchmark" or "inline"
    std::vector<std::string> trajectory_xd;
    std::vector<std::string> trajectory_xd_dot;

    SolverSettings solver;
    StackSettings stack;

    std::string output_dir;

    Regressor make_regressor() const
    {
        if (plant == "benchmark") {
            return benchmark_regressor();
        }
        if (plant == "inline") {
            return expression_regressor(regressor_entries);
        }
        throw Error(ErrorKind::Validation, "unknown plant '" + plant + "'");
    }

    DesiredTrajectory make_trajectory() const
    {
        if (trajectory == "benchmark") {
            return benchmark_trajectory();
        }
        if (trajectory == "inline") {
            return expression_trajectory(trajectory_xd, trajectory_xd_dot);
        }
        throw Error(ErrorKind::Validation, "unknown trajectory '" + trajectory + "'");
    }

    PlantConfig make_plant() const { return PlantConfig{make_regressor(), theta_true, x0}; }

    /// Number of logged samples, floor(horizon/dt) + 1, robust to the
    /// rounding of horizon/dt for grids that divide evenly.
    std::size_t sample_count() const
    {
        const double ratio = solver.horizon / solver.dt;
        const double nearest = std::round(ratio);
        const double steps = std::fabs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio) ? nearest : std::floor(ratio);
        return static_cast<std::size_t>(steps) + 1;
    }
};

inline constexpr double feasibility_tol = 1e-8;

/// Throws ValidationError naming the first violated invariant. With
/// check_estimate = false the feasibility of theta_hat0 is left to retract(),
/// which reports it as InfeasibleInitialEstimate.
inline void validate(const ScenarioConfig &s, bool check_estimate = true)
{
    auto fail = [](const std::string &what) { throw Error(ErrorKind::Validation, what); };

    const Regressor Y = s.make_regressor();
    const auto n = Y.states();
    const auto p = Y.params();
    if (s.theta_true.size() != p) {
        fail("theta_true must have length " + std::to_string(p));
    }
    if (s.x0.size() != n) {
        fail("x0 must have length " + std::to_string(n));
    }
    if (s.make_trajectory().states() != n) {
        fail("trajectory dimension must equal state dimension " + std::to_string(n));
    }
    if (s.A.cols() != p || s.A.rows() < 1 || s.A.rows() >= p) {
        fail("constraint matrix A must be m x " + std::to_string(p) + " with 1 <= m < " + std::to_string(p));
    }
    if (s.d.size() != s.A.rows()) {
        fail("constraint offset d must have length " + std::to_string(s.A.rows()));
    }
    if (s.k.size() != n) {
        fail("gain k must have " + std::to_string(n) + " diagonal entries");
    }
    if (!(s.k.array() > 0.0).all()) {
        fail("gain k must be positive definite (all diagonal entries > 0)");
    }
    if (!(s.gamma >= 0.0) || !std::isfinite(s.gamma)) {
        fail("gamma must be finite and nonnegative");
    }
    if (!(s.k_cl >= 0.0) || !std::isfinite(s.k_cl)) {
        fail("k_cl must be finite and nonnegative");
    }
    if (!(s.solver.dt > 0.0)) {
        fail("dt must be positive");
    }
    if (!(s.solver.horizon > s.solver.dt)) {
        fail("horizon T must exceed dt");
    }
    if (!(s.solver.overflow_guard > 0.0)) {
        fail("overflow_guard must be positive");
    }
    if (s.stack.capacity < 1 || s.stack.cadence < 1) {
        fail("stack capacity and cadence must be at least 1");
    }
    if (!(s.stack.sigma1_threshold > 0.0)) {
        fail("sigma1_threshold must be positive");
    }
    if (!(s.stack.rel_improve_tol >= 0.0)) {
        fail("rel_improve_tol must be nonnegative");
    }
    if (!s.theta_true.allFinite() || !s.x0.allFinite() || !s.k.allFinite()) {
        fail("scenario vectors must be finite");
    }

    const double true_viol = (s.A * s.theta_true - s.d).cwiseAbs().maxCoeff();
    if (!(true_viol <= feasibility_tol)) {
        fail("theta_true violates A*theta = d by " + std::to_string(true_viol));
    }
    if (s.theta_hat0.size() != 0) {
        if (s.theta_hat0.size() != p) {
            fail("theta_hat0 must have length " + std::to_string(p));
        }
        const double est_viol = (s.A * s.theta_hat0 - s.d).cwiseAbs().maxCoeff();
        if (check_estimate && !(est_viol <= feasibility_tol)) {
            fail("theta_hat0 violates A*theta = d by " + std::to_string(est_viol));
        }
    }
    // rank condition
    build_constraint(s.A, s.d);
}

namespace presets
{

/// Gradient law on theta = [5 5 10 20] under theta1 = theta2.
inline ScenarioConfig paper_sim1()
{
    ScenarioConfig s;
    s.name = "paper_sim1";
    s.plant = "benchmark";
    s.theta_true = Vector{{5.0, 5.0, 10.0, 20.0}};
    s.x0 = Vector{{10.0, 5.0}};
    s.A = Matrix{{1.0, -1.0, 0.0, 0.0}};
    s.d = Vector::Zero(1);
    s.law = Law::Gradient;
    s.k = 2.0 * Vector{{10.0, 50.0}};
    s.gamma = 0.4;
    s.k_cl = 0.0;
    s.theta_hat0 = Vector{{4.5, 4.5, 4.5, 15.0}};
    s.trajectory = "benchmark";
    return s;
}

/// Concurrent learning on theta = [5 20 10 20] under theta2 = theta4.
inline ScenarioConfig paper_sim2()
{
    ScenarioConfig s;
    s.name = "paper_sim2";
    s.plant = "benchmark";
    s.theta_true = Vector{{5.0, 20.0, 10.0, 20.0}};
    s.x0 = Vector{{10.0, 5.0}};
    s.A = Matrix{{0.0, -1.0, 0.0, 1.0}};
    s.d = Vector::Zero(1);
    s.law = Law::ConcurrentLearning;
    s.k = 2.0 * Vector{{10.0, 50.0}};
    s.gamma = 0.05;
    s.k_cl = 0.0008;
    s.theta_hat0 = Vector{{3.0, 10.0, 5.0, 10.0}};
    s.trajectory = "benchmark";
    return s;
}

inline std::vector<std::string> names() { return {"paper_sim1", "paper_sim2"}; }

inline ScenarioConfig by_name(const std::string &name)
{
    if (name == "paper_sim1") {
        return paper_sim1();
    }
    if (name == "paper_sim2") {
        return paper_sim2();
    }
    throw Error(ErrorKind::Validation, "unknown preset '" + name + "' (available: paper_sim1, paper_sim2)");
}

} // namespace presets

} // namespace eqadapt

#endif
