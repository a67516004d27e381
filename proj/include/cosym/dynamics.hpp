#pragma once

#include "cosym/legendre.hpp"
#include "cosym/systems.hpp"

#include <functional>
#include <map>
#include <string>
#include <vector>

namespace cosym {

struct IntegratorConfig {
    enum class Scheme { Rk4, Rk45 };

    Scheme scheme = Scheme::Rk4;
    double dt = 1e-3;     // fixed step (rk4)
    double rel_tol = 1e-8; // adaptive control (rk45)
    double abs_tol = 1e-10;
    double t_end = 1.0;
    std::size_t max_steps = 2000000;

    void validate() const; // throws Error on inconsistent settings
};

/// Integrated time series with per-step diagnostics. Diagnostics are
/// evaluated from the analytic evolution field at each accepted state, not
/// by differencing the series.
struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;

    bool halted_early = false;    // structure degenerated mid-trajectory
    std::string halt_reason;

    std::vector<std::string> diagnostic_names; // sorted
    std::vector<std::vector<double>> diagnostics; // [step][name slot]

    std::size_t size() const { return times.size(); }
    double diagnostic(std::size_t step, const std::string& name) const;
    bool has_diagnostic(const std::string& name) const;
};

using VectorField = std::function<std::vector<double>(std::span<const double>)>;
using DiagnosticsFn =
    std::function<std::map<std::string, double>(std::span<const double>, std::span<const double>)>;

/// Core integrator over an arbitrary field. Throws StepFailure on adaptive
/// step underflow or an exhausted step budget and NonFiniteState when a
/// state component leaves the reals; structure degeneration
/// (DegenerateStructure / TemperatureDegenerate) halts early instead and
/// flags the returned trajectory.
Trajectory integrate(const VectorField& field, std::span<const double> x0,
                     const IntegratorConfig& cfg, const DiagnosticsFn& diagnostics = {});

/// Same as integrate() but fills traj in place, so the accepted part of the
/// series is still there when StepFailure / NonFiniteState propagates.
void integrate_into(Trajectory& traj, const VectorField& field, std::span<const double> x0,
                    const IntegratorConfig& cfg, const DiagnosticsFn& diagnostics = {});

Trajectory integrate(const SystemInstance& sys, std::span<const double> x0,
                     const IntegratorConfig& cfg);
Trajectory integrate(const LagrangianSystem& sys, std::span<const double> x0,
                     const IntegratorConfig& cfg);

void integrate_into(Trajectory& traj, const SystemInstance& sys, std::span<const double> x0,
                    const IntegratorConfig& cfg);
void integrate_into(Trajectory& traj, const LagrangianSystem& sys, std::span<const double> x0,
                    const IntegratorConfig& cfg);

/// Residual tolerances used by check_invariants. Residuals that compare a
/// time derivative against recorded history use centered differences of
/// the series and carry a looser default than the analytic identities.
struct Tolerances {
    double entropy_identity = 1e-9;
    double oracle_gap = 1e-9;
    double energy_balance = 1e-6; // centered-difference dH/dt check
    double energy_drift = 1e-7;
    double matter_drift = 1e-10;
    double gauge_gap = 1e-7;
    double bookkeeping = 1e-9;
    double euler_lagrange = 1e-8;
    double monotonicity_slack = 1e-10;
};

struct InvariantReport {
    struct Entry {
        std::string name;
        double max_residual = 0.0;
        double at_time = 0.0;
        std::size_t at_index = 0;
        double tolerance = 0.0;
        bool pass = true;
    };

    std::vector<Entry> entries;

    bool pass() const;
    const Entry* find(const std::string& name) const;
};

/// Evaluates every invariant of the system class at each recorded step and
/// aggregates the worst residuals. Works from the recorded series (so
/// corrupted data is caught), recomputing analytic quantities as needed.
InvariantReport check_invariants(const Trajectory& traj, const SystemInstance& sys,
                                 const Tolerances& tol = {});
InvariantReport check_invariants(const Trajectory& traj, const LagrangianSystem& sys,
                                 const Tolerances& tol = {});

} // namespace cosym
