#ifndef EQADAPT_IO_HPP
#define EQADAPT_IO_HPP

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "eqadapt/errors.hpp"
#include "eqadapt/format.hpp"
#include "eqadapt/metrics.hpp"
#include "eqadapt/scenario.hpp"
#include "eqadapt/simulation.hpp"

namespace eqadapt
{

using json = nlohmann::json;

namespace detail
{

[[noreturn]] inline void parse_fail(const std::string &what)
{
    throw Error(ErrorKind::Parse, what);
}

inline Vector vector_from(const json &j, const std::string &key)
{
    if (!j.is_array()) {
        parse_fail("'" + key + "' must be an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) {
            parse_fail("'" + key + "' must be an array of numbers");
        }
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline Matrix matrix_from(const json &j, const std::string &key)
{
    if (!j.is_array() || j.empty()) {
        parse_fail("'" + key + "' must be a non-empty array of rows");
    }
    const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < j.size(); ++r) {
        if (!j[r].is_array() || j[r].size() != cols) {
            parse_fail("'" + key + "' rows must be arrays of equal length");
        }
        m.row(static_cast<Eigen::Index>(r)) = vector_from(j[r], key).transpose();
    }
    return m;
}

inline json to_json(const Vector &v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

inline json to_json(const Matrix &m)
{
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(to_json(Vector(m.row(r).transpose())));
    }
    return rows;
}

inline void check_keys(const json &obj, const std::set<std::string> &allowed, const std::string &where)
{
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            parse_fail("unknown key '" + it.key() + "' in " + where);
        }
    }
}

template <typename T>
T get_or(const json &obj, const std::string &key, T fallback)
{
    if (!obj.contains(key)) {
        return fallback;
    }
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception &) {
        parse_fail("'" + key + "' has the wrong type");
    }
}

} // namespace detail

/// Builds a scenario from its JSON form. Plant names "paper_sim1" and
/// "paper_sim2" select the benchmark regressor and default theta_true/x0 to
/// that preset's values.
inline ScenarioConfig scenario_from_json(const json &j)
{
    using namespace detail;
    if (!j.is_object()) {
        parse_fail("scenario must be a JSON object");
    }
    check_keys(j,
               {"name", "plant", "theta_true", "x0", "constraint", "law", "gains", "theta_hat0", "trajectory",
                "solver", "stack", "output"},
               "scenario");

    ScenarioConfig s;
    s.name = get_or<std::string>(j, "name", "scenario");

    const json plant = j.value("plant", json("benchmark"));
    if (plant.is_string()) {
        const auto name = plant.get<std::string>();
        if (name == "paper_sim1" || name == "paper_sim2") {
            const ScenarioConfig base = presets::by_name(name);
            s.theta_true = base.theta_true;
            s.x0 = base.x0;
            s.plant = "benchmark";
        } else if (name == "benchmark") {
            s.plant = "benchmark";
        } else {
            parse_fail("unknown plant '" + name + "'");
        }
    } else if (plant.is_object()) {
        check_keys(plant, {"regressor"}, "plant");
        if (!plant.contains("regressor")) {
            parse_fail("inline plant needs a 'regressor' table of expressions");
        }
        try {
            s.regressor_entries = plant.at("regressor").get<std::vector<std::vector<std::string>>>();
        } catch (const json::exception &) {
            parse_fail("'regressor' must be an array of rows of expression strings");
        }
        s.plant = "inline";
    } else {
        parse_fail("'plant' must be a name or an object");
    }

    if (j.contains("theta_true")) {
        s.theta_true = vector_from(j["theta_true"], "theta_true");
    }
    if (j.contains("x0")) {
        s.x0 = vector_from(j["x0"], "x0");
    }
    if (!j.contains("constraint")) {
        parse_fail("missing 'constraint'");
    }
    const json &c = j["constraint"];
    if (!c.is_object()) {
        parse_fail("'constraint' must be an object");
    }
    check_keys(c, {"A", "d"}, "constraint");
    s.A = matrix_from(c.value("A", json()), "A");
    s.d = c.contains("d") ? vector_from(c["d"], "d") : Vector(Vector::Zero(s.A.rows()));

    s.law = law_from_string(get_or<std::string>(j, "law", "gradient"));

    if (!j.contains("gains")) {
        parse_fail("missing 'gains'");
    }
    const json &g = j["gains"];
    if (!g.is_object()) {
        parse_fail("'gains' must be an object");
    }
    check_keys(g, {"k", "gamma", "k_cl"}, "gains");
    s.k = vector_from(g.value("k", json()), "k");
    s.gamma = get_or<double>(g, "gamma", s.gamma);
    s.k_cl = get_or<double>(g, "k_cl", 0.0);

    if (j.contains("theta_hat0") && !j["theta_hat0"].is_null()) {
        s.theta_hat0 = vector_from(j["theta_hat0"], "theta_hat0");
    }

    const json traj = j.value("trajectory", json("benchmark"));
    if (traj.is_string()) {
        const auto name = traj.get<std::string>();
        if (name != "benchmark" && name != "paper_sim1" && name != "paper_sim2") {
            parse_fail("unknown trajectory '" + name + "'");
        }
        s.trajectory = "benchmark";
    } else if (traj.is_object()) {
        check_keys(traj, {"xd", "xd_dot"}, "trajectory");
        try {
            s.trajectory_xd = traj.at("xd").get<std::vector<std::string>>();
            s.trajectory_xd_dot = traj.at("xd_dot").get<std::vector<std::string>>();
        } catch (const json::exception &) {
            parse_fail("inline trajectory needs 'xd' and 'xd_dot' arrays of expression strings");
        }
        s.trajectory = "inline";
    } else {
        parse_fail("'trajectory' must be a name or an object");
    }

    if (j.contains("solver")) {
        const json &sv = j["solver"];
        check_keys(sv, {"dt", "horizon", "overflow_guard"}, "solver");
        s.solver.dt = get_or<double>(sv, "dt", s.solver.dt);
        s.solver.horizon = get_or<double>(sv, "horizon", s.solver.horizon);
        s.solver.overflow_guard = get_or<double>(sv, "overflow_guard", s.solver.overflow_guard);
    }
    if (j.contains("stack")) {
        const json &st = j["stack"];
        check_keys(st, {"capacity", "cadence", "sigma1_threshold", "rel_improve_tol"}, "stack");
        s.stack.capacity = get_or<std::size_t>(st, "capacity", s.stack.capacity);
        s.stack.cadence = get_or<std::size_t>(st, "cadence", s.stack.cadence);
        s.stack.sigma1_threshold = get_or<double>(st, "sigma1_threshold", s.stack.sigma1_threshold);
        s.stack.rel_improve_tol = get_or<double>(st, "rel_improve_tol", s.stack.rel_improve_tol);
    }
    if (j.contains("output")) {
        check_keys(j["output"], {"dir"}, "output");
        s.output_dir = get_or<std::string>(j["output"], "dir", "");
    }
    return s;
}

inline json scenario_to_json(const ScenarioConfig &s)
{
    using detail::to_json;
    json j;
    j["name"] = s.name;
    if (s.plant == "inline") {
        j["plant"] = json{{"regressor", s.regressor_entries}};
    } else {
        j["plant"] = s.plant;
    }
    j["theta_true"] = to_json(s.theta_true);
    j["x0"] = to_json(s.x0);
    j["constraint"] = json{{"A", to_json(s.A)}, {"d", to_json(s.d)}};
    j["law"] = to_string(s.law);
    j["gains"] = json{{"k", to_json(s.k)}, {"gamma", s.gamma}, {"k_cl", s.k_cl}};
    j["theta_hat0"] = s.theta_hat0.size() == 0 ? json(nullptr) : to_json(s.theta_hat0);
    if (s.trajectory == "inline") {
        j["trajectory"] = json{{"xd", s.trajectory_xd}, {"xd_dot", s.trajectory_xd_dot}};
    } else {
        j["trajectory"] = s.trajectory;
    }
    j["solver"] = json{{"dt", s.solver.dt}, {"horizon", s.solver.horizon}, {"overflow_guard", s.solver.overflow_guard}};
    j["stack"] = json{{"capacity", s.stack.capacity},
                      {"cadence", s.stack.cadence},
                      {"sigma1_threshold", s.stack.sigma1_threshold},
                      {"rel_improve_tol", s.stack.rel_improve_tol}};
    if (!s.output_dir.empty()) {
        j["output"] = json{{"dir", s.output_dir}};
    }
    return j;
}

inline std::string read_file(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for reading");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Reads a scenario from a preset name or a JSON file path without
/// validating it, so callers can apply overrides first.
inline ScenarioConfig read_scenario(const std::string &path_or_preset)
{
    for (const auto &name : presets::names()) {
        if (name == path_or_preset) {
            return presets::by_name(name);
        }
    }
    json j;
    try {
        j = json::parse(read_file(path_or_preset));
    } catch (const json::parse_error &e) {
        throw Error(ErrorKind::Parse, "'" + path_or_preset + "': " + e.what());
    }
    return scenario_from_json(j);
}

inline ScenarioConfig load_scenario(const std::string &path_or_preset)
{
    ScenarioConfig s = read_scenario(path_or_preset);
    validate(s);
    return s;
}

inline void write_text(const std::filesystem::path &path, const std::string &text)
{
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) {
            throw Error(ErrorKind::Io, "cannot create directory '" + path.parent_path().string() + "': " + ec.message());
        }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw Error(ErrorKind::Io, "write to '" + path.string() + "' failed");
    }
}

inline void save_scenario(const std::filesystem::path &path, const ScenarioConfig &s)
{
    write_text(path, scenario_to_json(s).dump(2) + "\n");
}

inline std::string trajectory_csv_header(Eigen::Index n, Eigen::Index p)
{
    std::string h = "t";
    for (const char *group : {"x", "xd", "e", "u"}) {
        for (Eigen::Index i = 1; i <= n; ++i) {
            h += std::string(",") + group + std::to_string(i);
        }
    }
    for (const char *group : {"theta_hat", "theta_tilde"}) {
        for (Eigen::Index i = 1; i <= p; ++i) {
            h += std::string(",") + group + std::to_string(i);
        }
    }
    h += ",constraint_violation,V,lambda_min_YR,fe_flag";
    return h;
}

inline std::string trajectory_csv(const TrajectoryLog &log)
{
    if (log.records.empty()) {
        return {};
    }
    const auto n = log.records.front().x.size();
    const auto p = log.records.front().theta_hat.size();
    std::string out = trajectory_csv_header(n, p) + "\n";
    auto put = [&out](const Vector &v) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            out += ',';
            out += format_double(v(i));
        }
    };
    for (const auto &r : log.records) {
        out += format_double(r.t);
        put(r.x);
        put(r.xd);
        put(r.e);
        put(r.u);
        put(r.theta_hat);
        put(r.theta_tilde);
        out += ',' + format_double(r.constraint_violation);
        out += ',' + format_double(r.V);
        out += ',' + format_double(r.lambda_min);
        out += r.fe_flag ? ",1\n" : ",0\n";
    }
    return out;
}

inline std::string oracle_csv(const OracleTrajectory &oracle)
{
    if (oracle.theta_hat.empty()) {
        return {};
    }
    std::string out = "t";
    for (Eigen::Index i = 1; i <= oracle.theta_hat.front().size(); ++i) {
        out += ",theta_hat_full" + std::to_string(i);
    }
    out += '\n';
    for (std::size_t k = 0; k < oracle.t.size(); ++k) {
        out += format_double(oracle.t[k]);
        for (Eigen::Index i = 0; i < oracle.theta_hat[k].size(); ++i) {
            out += ',' + format_double(oracle.theta_hat[k](i));
        }
        out += '\n';
    }
    return out;
}

/// key=value lines
inline std::string summary_text(const RunSummary &s)
{
    std::string out;
    for (const auto &[k, v] : s.fields()) {
        out += k + "=" + v + "\n";
    }
    return out;
}

} // namespace eqadapt

#endif
