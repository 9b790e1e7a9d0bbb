// Command-line front end: run, sweep, validate and list scenarios.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "eqadapt/eqadapt.hpp"

namespace fs = std::filesystem;
using namespace eqadapt;

namespace
{

constexpr const char *out_env = "EQADAPT_OUT_DIR";

enum Exit : int { ok = 0, generic = 1, validation = 2, diverged = 3, io = 4 };

int exit_code(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::Diverged:
        return diverged;
    case ErrorKind::Io:
        return io;
    default:
        return validation;
    }
}

struct Source {
    std::string scenario;
    std::string preset;
    std::optional<double> dt;
    std::optional<double> horizon;

    void attach(CLI::App *cmd)
    {
        auto *s = cmd->add_option("--scenario", scenario, "scenario JSON file (or a preset name)");
        auto *p = cmd->add_option("--preset", preset, "built-in preset name");
        s->excludes(p);
        cmd->add_option("--dt", dt, "override the integration step");
        cmd->add_option("--horizon", horizon, "override the final time T");
    }

    ScenarioConfig load() const
    {
        if (scenario.empty() && preset.empty()) {
            throw Error(ErrorKind::Validation, "one of --scenario or --preset is required");
        }
        ScenarioConfig s = preset.empty() ? read_scenario(scenario) : presets::by_name(preset);
        if (dt) {
            s.solver.dt = *dt;
        }
        if (horizon) {
            s.solver.horizon = *horizon;
        }
        validate(s);
        return s;
    }
};

fs::path default_out(const ScenarioConfig &s)
{
    if (!s.output_dir.empty()) {
        return s.output_dir;
    }
    const char *env = std::getenv(out_env);
    const fs::path root = env && *env ? fs::path(env) : fs::path("eqadapt_out");
    return root / (s.name.empty() ? std::string("scenario") : s.name);
}

struct RunOutcome {
    RunSummary summary;
};

RunOutcome execute(const ScenarioConfig &s, const fs::path &out, bool with_oracle)
{
    const TrajectoryLog log = run(s);
    std::optional<LyapunovReport> report;
    if (s.gamma > 0.0 && (s.law == Law::Gradient || log.fe_latch_index)) {
        report = lyapunov_series(log, s.gamma);
    }
    RunOutcome outcome{summary(log, report ? &*report : nullptr)};
    if (with_oracle) {
        const OracleTrajectory oracle = oracle_full_dimension(s);
        outcome.summary.oracle_max_deviation = max_oracle_deviation(log, oracle);
        write_text(out / "oracle.csv", oracle_csv(oracle));
    }
    write_text(out / "trajectory.csv", trajectory_csv(log));
    write_text(out / "summary.txt", summary_text(outcome.summary));
    save_scenario(out / "scenario.json", s);
    return outcome;
}

// --grid key=v1,v2,... over gamma, k_cl, dt, h
using Grid = std::vector<std::pair<std::string, std::vector<double>>>;

Grid parse_grid(const std::vector<std::string> &specs)
{
    static const std::vector<std::string> keys{"gamma", "k_cl", "dt", "h"};
    Grid grid;
    for (const auto &spec : specs) {
        const auto eq = spec.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Validation, "grid entry '" + spec + "' must look like key=v1,v2");
        }
        const std::string key = spec.substr(0, eq);
        for (const auto &g : grid) {
            if (g.first == key) {
                throw Error(ErrorKind::Validation, "grid key '" + key + "' given twice");
            }
        }
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw Error(ErrorKind::Validation, "grid key '" + key + "' must be one of gamma, k_cl, dt, h");
        }
        std::vector<double> values;
        std::stringstream ss(spec.substr(eq + 1));
        for (std::string item; std::getline(ss, item, ',');) {
            if (item.empty()) {
                continue;
            }
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(item, &used);
            } catch (const std::exception &) {
                used = 0;
            }
            if (used != item.size()) {
                throw Error(ErrorKind::Validation, "grid value '" + item + "' for " + key + " is not a number");
            }
            values.push_back(v);
        }
        if (values.empty()) {
            throw Error(ErrorKind::Validation, "grid key '" + key + "' has no values");
        }
        grid.emplace_back(key, std::move(values));
    }
    if (grid.empty()) {
        throw Error(ErrorKind::Validation, "empty parameter grid");
    }
    return grid;
}

std::vector<std::map<std::string, double>> expand(const Grid &grid)
{
    std::vector<std::map<std::string, double>> points{{}};
    for (const auto &[key, values] : grid) {
        std::vector<std::map<std::string, double>> next;
        for (const auto &p : points) {
            for (double v : values) {
                auto q = p;
                q[key] = v;
                next.push_back(std::move(q));
            }
        }
        points = std::move(next);
    }
    return points;
}

void apply(ScenarioConfig &s, const std::map<std::string, double> &point)
{
    for (const auto &[key, v] : point) {
        if (key == "gamma") {
            s.gamma = v;
        } else if (key == "k_cl") {
            s.k_cl = v;
        } else if (key == "dt") {
            s.solver.dt = v;
        } else if (key == "h") {
            if (!(v >= 1.0) || v != std::floor(v)) {
                throw Error(ErrorKind::Validation, "stack capacity h must be a positive integer");
            }
            s.stack.capacity = static_cast<std::size_t>(v);
        }
    }
}

struct SweepRow {
    std::map<std::string, double> point;
    std::string status = "ok";
    std::optional<RunSummary> summary;
    std::string message;
};

std::string sweep_table(const Grid &grid, const std::vector<SweepRow> &rows)
{
    static const std::vector<std::string> reported{"final_error_norm",         "final_theta_tilde_norm",
                                                   "max_constraint_violation", "fe_latch_time",
                                                   "sigma1",                   "envelope_ok",
                                                   "runtime_seconds"};
    std::string out = "run";
    for (const auto &g : grid) {
        out += "," + g.first;
    }
    out += ",status";
    for (const auto &k : reported) {
        out += "," + k;
    }
    out += ",message\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out += std::to_string(i);
        for (const auto &g : grid) {
            out += "," + format_double(rows[i].point.at(g.first));
        }
        out += "," + rows[i].status;
        std::map<std::string, std::string> fields;
        if (rows[i].summary) {
            for (auto &[k, v] : rows[i].summary->fields()) {
                fields[k] = v;
            }
        }
        for (const auto &k : reported) {
            out += "," + (fields.count(k) ? fields[k] : std::string("none"));
        }
        std::string msg = rows[i].message;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        out += "," + msg + "\n";
    }
    return out;
}

int report(const Error &e)
{
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Equality-constrained adaptive control simulator"};
    app.require_subcommand(1);

    Source run_src;
    std::string run_out;
    bool run_oracle = false;
    auto *run_cmd = app.add_subcommand("run", "simulate one scenario and write CSV and summary");
    run_src.attach(run_cmd);
    run_cmd->add_option("--out", run_out, std::string("output directory (default $") + out_env + "/<name>)");
    run_cmd->add_flag("--oracle", run_oracle, "also integrate the full-dimension projected dynamics");

    Source sweep_src;
    std::string sweep_out;
    std::vector<std::string> grid_specs;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    bool sweep_oracle = false;
    auto *sweep_cmd = app.add_subcommand("sweep", "run a grid of scenarios and tabulate the summaries");
    sweep_src.attach(sweep_cmd);
    sweep_cmd->add_option("--out", sweep_out, "output directory for the sweep");
    sweep_cmd->add_option("--grid", grid_specs, "key=v1,v2,... with key in gamma, k_cl, dt, h (repeatable)");
    sweep_cmd->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);
    sweep_cmd->add_flag("--oracle", sweep_oracle, "run the full-dimension oracle for every point");

    Source check_src;
    auto *validate_cmd = app.add_subcommand("validate", "load and check a scenario without running it");
    check_src.attach(validate_cmd);

    std::string show;
    auto *presets_cmd = app.add_subcommand("presets", "list built-in scenarios");
    presets_cmd->add_option("--show", show, "print one preset as JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation;
    }

    try {
        if (*presets_cmd) {
            if (!show.empty()) {
                std::cout << scenario_to_json(presets::by_name(show)).dump(2) << "\n";
            } else {
                for (const auto &name : presets::names()) {
                    std::cout << name << "\n";
                }
            }
            return ok;
        }

        if (*validate_cmd) {
            const ScenarioConfig s = check_src.load();
            std::cout << "ok " << s.name << " (" << to_string(s.law) << ", " << s.sample_count() << " samples)\n";
            return ok;
        }

        if (*run_cmd) {
            const ScenarioConfig s = run_src.load();
            const fs::path out = run_out.empty() ? default_out(s) : fs::path(run_out);
            const RunOutcome r = execute(s, out, run_oracle);
            std::cout << summary_text(r.summary);
            std::cout << "wrote " << (out / "trajectory.csv").string() << "\n";
            return ok;
        }

        if (*sweep_cmd) {
            const ScenarioConfig base = sweep_src.load();
            const Grid grid = parse_grid(grid_specs);
            const auto points = expand(grid);
            const fs::path out = sweep_out.empty() ? default_out(base) / "sweep" : fs::path(sweep_out);

            std::vector<SweepRow> rows(points.size());
            std::atomic<std::size_t> next{0};
            auto worker = [&] {
                for (std::size_t i = next++; i < points.size(); i = next++) {
                    SweepRow &row = rows[i];
                    row.point = points[i];
                    try {
                        ScenarioConfig s = base;
                        apply(s, points[i]);
                        validate(s);
                        s.name = base.name + "_" + std::to_string(i);
                        row.summary = execute(s, out / ("run_" + std::to_string(i)), sweep_oracle).summary;
                    } catch (const Error &e) {
                        row.status = to_string(e.kind());
                        row.message = e.what();
                    } catch (const std::exception &e) {
                        row.status = "error";
                        row.message = e.what();
                    }
                }
            };
            const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(points.size()));
            std::vector<std::thread> pool;
            for (unsigned k = 0; k < n; ++k) {
                pool.emplace_back(worker);
            }
            for (auto &t : pool) {
                t.join();
            }

            const std::string table = sweep_table(grid, rows);
            write_text(out / "sweep_summary.csv", table);
            std::cout << table;
            const auto failed = std::count_if(rows.begin(), rows.end(), [](const SweepRow &r) { return !r.summary; });
            if (failed > 0) {
                std::cerr << failed << " of " << rows.size() << " runs failed; see the status column\n";
            }
            return ok;
        }
    } catch (const Error &e) {
        return report(e);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return generic;
    }
    return ok;
}
