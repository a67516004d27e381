#pragma once

#include "cosym/dynamics.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cosym {

/// One machine-readable validation finding.
struct Diagnostic {
    std::string code; // stable identifier, e.g. "unknown-variable"
    std::string message;

    std::string to_line() const { return "error " + code + ": " + message; }
};

/// A fully validated scenario, ready to run. Exactly one of system /
/// lagrangian is set, matching which energy function the file supplied.
struct ScenarioConfig {
    std::string name;
    std::string path;
    SystemClass system_class = SystemClass::SimpleClosed;
    bool lagrangian_side = false;

    std::optional<SystemInstance> system;
    std::optional<LagrangianSystem> lagrangian;
    std::vector<double> initial_state;

    IntegratorConfig integrator;
    Tolerances tolerances;
    double legendre_tolerance = 1e-6;

    std::string series_name; // file names, resolved against the output dir
    std::string report_name;

    const ChartSpec& chart() const {
        return lagrangian_side ? lagrangian->velocity_chart() : system->chart();
    }
};

struct ScenarioLoad {
    std::vector<Diagnostic> errors;
    std::optional<ScenarioConfig> config; // engaged iff errors is empty

    bool ok() const { return errors.empty(); }
};

/// Reads, parses and statically validates a scenario file. Never throws on
/// bad content; every problem becomes a Diagnostic.
ScenarioLoad load_scenario(const std::string& path);

/// Time-series table: t, chart coordinates, then the energy column and the
/// remaining diagnostics in alphabetical order. %.17g throughout, so equal
/// runs are byte-identical.
void write_series_csv(std::ostream& os, const Trajectory& traj, const ChartSpec& chart);

struct RunSummary {
    std::string status; // completed | halted_early | error
    std::string detail;
    unsigned seed = 0;
};

void write_report(std::ostream& os, const ScenarioConfig& cfg, const Trajectory& traj,
                  const InvariantReport& report, const RunSummary& summary);

} // namespace cosym
