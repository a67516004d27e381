#include "cosym/dynamics.hpp"

#include "cosym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cosym {

void IntegratorConfig::validate() const {
    if (!(t_end > 0.0)) throw Error("integrator t_end must be positive");
    if (scheme == Scheme::Rk4) {
        if (!(dt > 0.0)) throw Error("integrator dt must be positive");
        if (dt > t_end) throw Error("integrator dt must not exceed t_end");
    } else {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw Error("integrator tolerances must be positive");
    }
    if (max_steps == 0) throw Error("integrator max_steps must be positive");
}

double Trajectory::diagnostic(std::size_t step, const std::string& name) const {
    const auto it = std::find(diagnostic_names.begin(), diagnostic_names.end(), name);
    if (it == diagnostic_names.end()) throw Error("unknown diagnostic '" + name + "'");
    return diagnostics[step][static_cast<std::size_t>(it - diagnostic_names.begin())];
}

bool Trajectory::has_diagnostic(const std::string& name) const {
    return std::find(diagnostic_names.begin(), diagnostic_names.end(), name) !=
           diagnostic_names.end();
}

namespace {

using State = std::vector<double>;

State axpy(std::span<const double> x, double a, std::span<const double> y) {
    State out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + a * y[i];
    return out;
}

void record(Trajectory& traj, double t, const State& x, const State& xdot,
            const DiagnosticsFn& diagnostics) {
    traj.times.push_back(t);
    traj.states.push_back(x);
    if (!diagnostics) return;
    const std::map<std::string, double> values = diagnostics(x, xdot);
    if (traj.diagnostic_names.empty()) {
        for (const auto& [name, _] : values) traj.diagnostic_names.push_back(name);
    }
    std::vector<double> row;
    row.reserve(traj.diagnostic_names.size());
    for (const auto& name : traj.diagnostic_names) row.push_back(values.at(name));
    traj.diagnostics.push_back(std::move(row));
}

// classic fixed-step scheme
void run_rk4(const VectorField& f, State x, const IntegratorConfig& cfg, Trajectory& traj,
             const DiagnosticsFn& diagnostics) {
    double t = 0.0;
    State k1 = f(x);
    record(traj, t, x, k1, diagnostics);

    std::size_t steps = 0;
    while (t < cfg.t_end - 1e-12 * cfg.t_end) {
        if (++steps > cfg.max_steps) throw StepFailure("step budget exhausted");
        const double h = std::min(cfg.dt, cfg.t_end - t);

        const State k2 = f(axpy(x, 0.5 * h, k1));
        const State k3 = f(axpy(x, 0.5 * h, k2));
        const State k4 = f(axpy(x, h, k3));
        for (std::size_t i = 0; i < x.size(); ++i)
            x[i] += (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        t += h;

        if (!linalg::all_finite(x)) throw NonFiniteState("state left the reals at t = " +
                                                         std::to_string(t));
        k1 = f(x);
        record(traj, t, x, k1, diagnostics);
    }
}

// Dormand-Prince 5(4) with standard PI-free step control
void run_rk45(const VectorField& f, State x, const IntegratorConfig& cfg, Trajectory& traj,
              const DiagnosticsFn& diagnostics) {
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const std::size_t d = x.size();
    double t = 0.0;
    State k1 = f(x);
    record(traj, t, x, k1, diagnostics);

    double h = std::min(cfg.t_end / 100.0, 1e-2);
    std::size_t steps = 0;
    while (t < cfg.t_end - 1e-12 * cfg.t_end) {
        if (++steps > cfg.max_steps) throw StepFailure("step budget exhausted");
        h = std::min(h, cfg.t_end - t);
        if (h < 1e-14) throw StepFailure("adaptive step underflow at t = " + std::to_string(t));

        const State k2 = f(axpy(x, h * a21, k1));
        State y(d);
        for (std::size_t i = 0; i < d; ++i) y[i] = x[i] + h * (a31 * k1[i] + a32 * k2[i]);
        const State k3 = f(y);
        for (std::size_t i = 0; i < d; ++i)
            y[i] = x[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        const State k4 = f(y);
        for (std::size_t i = 0; i < d; ++i)
            y[i] = x[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        const State k5 = f(y);
        for (std::size_t i = 0; i < d; ++i)
            y[i] = x[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] +
                               a65 * k5[i]);
        const State k6 = f(y);
        State xnew(d);
        for (std::size_t i = 0; i < d; ++i)
            xnew[i] = x[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        const State k7 = f(xnew);

        double err = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            const double ei = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] +
                                   e6 * k6[i] + e7 * k7[i]);
            const double scale =
                cfg.abs_tol + cfg.rel_tol * std::max(std::abs(x[i]), std::abs(xnew[i]));
            err += (ei / scale) * (ei / scale);
        }
        err = std::sqrt(err / static_cast<double>(d));

        if (err <= 1.0) {
            t += h;
            x = std::move(xnew);
            if (!linalg::all_finite(x))
                throw NonFiniteState("state left the reals at t = " + std::to_string(t));
            k1 = k7; // first-same-as-last
            record(traj, t, x, k1, diagnostics);
        }
        const double factor =
            err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        h *= factor;
    }
}

} // namespace

void integrate_into(Trajectory& traj, const VectorField& field, std::span<const double> x0,
                    const IntegratorConfig& cfg, const DiagnosticsFn& diagnostics) {
    cfg.validate();
    if (!linalg::all_finite(x0)) throw NonFiniteState("initial state is not finite");

    State x(x0.begin(), x0.end());
    try {
        if (cfg.scheme == IntegratorConfig::Scheme::Rk4)
            run_rk4(field, std::move(x), cfg, traj, diagnostics);
        else
            run_rk45(field, std::move(x), cfg, traj, diagnostics);
    } catch (const DegenerateStructure& e) {
        traj.halted_early = true;
        traj.halt_reason = e.what();
    } catch (const TemperatureDegenerate& e) {
        traj.halted_early = true;
        traj.halt_reason = e.what();
    }
}

Trajectory integrate(const VectorField& field, std::span<const double> x0,
                     const IntegratorConfig& cfg, const DiagnosticsFn& diagnostics) {
    Trajectory traj;
    integrate_into(traj, field, x0, cfg, diagnostics);
    return traj;
}

void integrate_into(Trajectory& traj, const SystemInstance& sys, std::span<const double> x0,
                    const IntegratorConfig& cfg) {
    integrate_into(traj, [&sys](std::span<const double> x) { return sys.evolution_field(x); },
                   x0, cfg,
                   [&sys](std::span<const double> x, std::span<const double> xdot) {
                       return sys.diagnostics(x, xdot);
                   });
}

void integrate_into(Trajectory& traj, const LagrangianSystem& sys, std::span<const double> x0,
                    const IntegratorConfig& cfg) {
    integrate_into(traj, [&sys](std::span<const double> x) { return sys.evolution_field(x); },
                   x0, cfg,
                   [&sys](std::span<const double> x, std::span<const double> xdot) {
                       return sys.diagnostics(x, xdot);
                   });
}

Trajectory integrate(const SystemInstance& sys, std::span<const double> x0,
                     const IntegratorConfig& cfg) {
    Trajectory traj;
    integrate_into(traj, sys, x0, cfg);
    return traj;
}

Trajectory integrate(const LagrangianSystem& sys, std::span<const double> x0,
                     const IntegratorConfig& cfg) {
    Trajectory traj;
    integrate_into(traj, sys, x0, cfg);
    return traj;
}

bool InvariantReport::pass() const {
    for (const Entry& e : entries)
        if (!e.pass) return false;
    return true;
}

const InvariantReport::Entry* InvariantReport::find(const std::string& name) const {
    for (const Entry& e : entries)
        if (e.name == name) return &e;
    return nullptr;
}

namespace {

class EntryBuilder {
public:
    EntryBuilder(std::string name, double tolerance)
        : entry_{std::move(name), 0.0, 0.0, 0, tolerance, true} {}

    void update(double residual, double t, std::size_t index) {
        const double r = std::abs(residual);
        if (r > entry_.max_residual) {
            entry_.max_residual = r;
            entry_.at_time = t;
            entry_.at_index = index;
        }
    }

    InvariantReport::Entry finish() {
        entry_.pass = entry_.max_residual <= entry_.tolerance;
        return entry_;
    }

private:
    InvariantReport::Entry entry_;
};

// centered difference of a recorded series; one-sided at the ends
double series_derivative(const std::vector<double>& t, const std::vector<double>& v,
                         std::size_t i) {
    const std::size_t n = t.size();
    if (n < 2) return 0.0;
    const std::size_t lo = i == 0 ? 0 : i - 1;
    const std::size_t hi = i + 1 >= n ? n - 1 : i + 1;
    return (v[hi] - v[lo]) / (t[hi] - t[lo]);
}

} // namespace

InvariantReport check_invariants(const Trajectory& traj, const SystemInstance& sys,
                                 const Tolerances& tol) {
    const ChartSpec& chart = sys.chart();
    const std::size_t n_steps = traj.size();

    EntryBuilder entropy("entropy_identity", tol.entropy_identity);
    EntryBuilder oracle("oracle_gap", tol.oracle_gap);
    EntryBuilder balance("energy_balance", tol.energy_balance);

    const bool closed = chart.system_class != SystemClass::OpenSimple;
    const bool conservative = closed && !sys.has_external_force();
    EntryBuilder drift("energy_drift", tol.energy_drift);
    EntryBuilder matter("matter_conservation", tol.matter_drift);
    EntryBuilder gauge("gauge_gap", tol.gauge_gap);
    EntryBuilder bookkeeping("entropy_bookkeeping", tol.bookkeeping);

    std::vector<double> h_series(n_steps, 0.0);
    std::vector<double> external_power(n_steps, 0.0);

    double h0 = 0.0, sum_n0 = 0.0;
    std::vector<double> gauge0;
    bool dissipative = true;
    double prev_total_entropy = 0.0;
    EntryBuilder monotonic("entropy_monotonic", tol.monotonicity_slack);

    for (std::size_t i = 0; i < n_steps; ++i) {
        const std::vector<double>& x = traj.states[i];
        const double t = traj.times[i];
        const std::vector<double> xdot = sys.evolution_field(x);
        const StateIngredients in = sys.ingredients(x);

        h_series[i] = in.energy;
        double power = in.external_power;
        for (std::size_t j = 0; j < chart.pairs; ++j)
            power += in.external[j] * xdot[chart.q_index(j)];
        external_power[i] = power;

        const std::vector<double> residuals = sys.entropy_identity_residuals(x, xdot);
        for (double r : residuals) entropy.update(r, t, i);

        const std::vector<double> explicit_rhs = sys.explicit_rhs_oracle(x);
        for (std::size_t j = 0; j < x.size(); ++j)
            oracle.update(xdot[j] - explicit_rhs[j], t, i);

        if (i == 0) {
            h0 = in.energy;
            if (chart.system_class == SystemClass::NonSimple)
                for (std::size_t a = 0; a < chart.subsystems; ++a)
                    gauge0.push_back(x[chart.s_index(a)] - x[chart.sigma_index(a)]);
            if (chart.compartments > 0)
                for (std::size_t k = 0; k < chart.compartments; ++k)
                    sum_n0 += x[chart.n_index(k)];
        }
        if (conservative) drift.update(in.energy - h0, t, i);
        if (closed && chart.compartments > 0) {
            double sum_n = 0.0;
            for (std::size_t k = 0; k < chart.compartments; ++k) sum_n += x[chart.n_index(k)];
            matter.update(sum_n - sum_n0, t, i);
        }
        if (chart.system_class == SystemClass::NonSimple)
            for (std::size_t a = 0; a < chart.subsystems; ++a)
                gauge.update(x[chart.s_index(a)] - x[chart.sigma_index(a)] - gauge0[a], t, i);
        if (chart.system_class == SystemClass::OpenSimple)
            bookkeeping.update(xdot[chart.s_index(0)] - xdot[chart.sigma_index(0)] -
                                   in.port_entropy_flow_total,
                               t, i);

        // dissipativity precondition: friction power <= 0 and positive
        // temperatures along the whole trajectory
        double friction_power = 0.0;
        for (std::size_t k = 0; k < chart.eta_count(); ++k)
            for (std::size_t j = 0; j < chart.pairs; ++j)
                friction_power += in.friction[k][j] * xdot[chart.q_index(j)];
        double min_t = in.temperatures[0];
        for (double temp : in.temperatures) min_t = std::min(min_t, temp);
        if (friction_power > 1e-12 || min_t <= 0.0) dissipative = false;

        double total_entropy = 0.0;
        for (std::size_t k = 0; k < chart.entropy_count(); ++k)
            total_entropy += x[chart.s_index(k)];
        if (i > 0) monotonic.update(std::max(0.0, prev_total_entropy - total_entropy), t, i);
        prev_total_entropy = total_entropy;
    }

    for (std::size_t i = 1; i + 1 < n_steps; ++i)
        balance.update(series_derivative(traj.times, h_series, i) - external_power[i],
                       traj.times[i], i);

    InvariantReport report;
    report.entries.push_back(entropy.finish());
    report.entries.push_back(oracle.finish());
    if (n_steps >= 3) report.entries.push_back(balance.finish());
    if (conservative) report.entries.push_back(drift.finish());
    if (closed && chart.compartments > 0) report.entries.push_back(matter.finish());
    if (chart.system_class == SystemClass::NonSimple) report.entries.push_back(gauge.finish());
    if (chart.system_class == SystemClass::OpenSimple)
        report.entries.push_back(bookkeeping.finish());
    if (dissipative && closed) report.entries.push_back(monotonic.finish());
    return report;
}

InvariantReport check_invariants(const Trajectory& traj, const LagrangianSystem& sys,
                                 const Tolerances& tol) {
    const ChartSpec& chart = sys.velocity_chart();
    const std::size_t n_steps = traj.size();

    EntryBuilder entropy("entropy_identity", tol.entropy_identity);
    EntryBuilder euler_lagrange("euler_lagrange", tol.euler_lagrange);
    EntryBuilder balance("energy_balance", tol.energy_balance);
    const bool closed = chart.system_class != SystemClass::OpenSimple;
    bool conservative = closed;
    EntryBuilder drift("energy_drift", tol.energy_drift);
    EntryBuilder matter("matter_conservation", tol.matter_drift);
    EntryBuilder gauge("gauge_gap", tol.gauge_gap);
    EntryBuilder bookkeeping("entropy_bookkeeping", tol.bookkeeping);

    std::vector<double> e_series(n_steps, 0.0);
    std::vector<double> external_power(n_steps, 0.0);
    double e0 = 0.0, sum_n0 = 0.0;
    std::vector<double> gauge0;

    for (std::size_t i = 0; i < n_steps; ++i) {
        const std::vector<double>& x = traj.states[i];
        const double t = traj.times[i];
        const std::vector<double> xdot = sys.evolution_field(x);
        const std::map<std::string, double> diag = sys.diagnostics(x, xdot);
        const StateIngredients in = sys.ingredients(x);

        e_series[i] = in.energy;
        double power = in.external_power;
        for (std::size_t j = 0; j < chart.pairs; ++j)
            power += in.external[j] * xdot[chart.q_index(j)];
        external_power[i] = power;
        if (power != 0.0) conservative = false;

        for (const auto& [name, value] : diag) {
            if (name.rfind("entropy_residual", 0) == 0) entropy.update(value, t, i);
        }
        euler_lagrange.update(diag.at("euler_lagrange_residual"), t, i);
        euler_lagrange.update(diag.at("sode_residual"), t, i);

        if (i == 0) {
            e0 = in.energy;
            if (chart.system_class == SystemClass::NonSimple)
                for (std::size_t a = 0; a < chart.subsystems; ++a)
                    gauge0.push_back(x[chart.s_index(a)] - x[chart.sigma_index(a)]);
            for (std::size_t k = 0; k < chart.compartments; ++k) sum_n0 += x[chart.n_index(k)];
        }
        if (closed && chart.compartments > 0) {
            double sum_n = 0.0;
            for (std::size_t k = 0; k < chart.compartments; ++k) sum_n += x[chart.n_index(k)];
            matter.update(sum_n - sum_n0, t, i);
        }
        if (chart.system_class == SystemClass::NonSimple)
            for (std::size_t a = 0; a < chart.subsystems; ++a)
                gauge.update(x[chart.s_index(a)] - x[chart.sigma_index(a)] - gauge0[a], t, i);
        if (chart.system_class == SystemClass::OpenSimple)
            bookkeeping.update(diag.at("bookkeeping_residual"), t, i);
    }
    for (std::size_t i = 0; i < n_steps; ++i)
        if (conservative) drift.update(e_series[i] - e0, traj.times[i], i);

    for (std::size_t i = 1; i + 1 < n_steps; ++i)
        balance.update(series_derivative(traj.times, e_series, i) - external_power[i],
                       traj.times[i], i);

    InvariantReport report;
    report.entries.push_back(entropy.finish());
    report.entries.push_back(euler_lagrange.finish());
    if (n_steps >= 3) report.entries.push_back(balance.finish());
    if (conservative) report.entries.push_back(drift.finish());
    if (closed && chart.compartments > 0) report.entries.push_back(matter.finish());
    if (chart.system_class == SystemClass::NonSimple) report.entries.push_back(gauge.finish());
    if (chart.system_class == SystemClass::OpenSimple)
        report.entries.push_back(bookkeeping.finish());
    return report;
}

} // namespace cosym
