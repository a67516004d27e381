#include "cosym/dynamics.hpp"

#include "cosym/errors.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace cosym;
using namespace cosym::testing;

namespace {

SystemInstance damped_oscillator(double T0 = 1.0, double lam = 0.1) {
    ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
    ParameterSet params{{"T0", "lam"}, {T0, lam}};
    auto h = std::make_shared<ExprScalarField>(
        parse_in(chart, params, "p^2/2 + q^2/2 + T0*S"), chart.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{parse_in(chart, params, "-lam*p")}};
    return SystemInstance::make(chart, h, forces, FluxSpec{}, params);
}

IntegratorConfig rk4_config(double dt, double t_end) {
    IntegratorConfig cfg;
    cfg.scheme = IntegratorConfig::Scheme::Rk4;
    cfg.dt = dt;
    cfg.t_end = t_end;
    return cfg;
}

} // namespace

TEST_CASE("integrator configuration is validated") {
    IntegratorConfig cfg;
    cfg.dt = -1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg.dt = 2.0;
    cfg.t_end = 1.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = IntegratorConfig{};
    cfg.scheme = IntegratorConfig::Scheme::Rk45;
    cfg.rel_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("damped oscillator conserves energy and produces entropy") {
    const SystemInstance sys = damped_oscillator();
    const Trajectory traj =
        integrate(sys, std::vector<double>{1.0, 0.0, 0.0}, rk4_config(1e-3, 10.0));
    REQUIRE(!traj.halted_early);
    REQUIRE(traj.size() == 10001);
    CHECK(traj.times.back() == doctest::Approx(10.0).epsilon(1e-12));

    const double h0 = traj.diagnostic(0, "H");
    double mech0 = 1.0;
    double prev_s = traj.states[0][2];
    double mech_last = mech0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK(std::abs(traj.diagnostic(i, "H") - h0) <= 1e-8);
        const double s = traj.states[i][2];
        CHECK(s >= prev_s - 1e-12); // entropy never decreases
        prev_s = s;
        mech_last = 0.5 * (traj.states[i][0] * traj.states[i][0] +
                           traj.states[i][1] * traj.states[i][1]);
    }
    CHECK(mech_last < 0.5 * mech0); // mechanical energy drains into heat
    CHECK(prev_s > 0.1);
}

TEST_CASE("a state with no dynamics stays put") {
    ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
    ParameterSet params{{"T0"}, {1.0}};
    auto h = std::make_shared<ExprScalarField>(parse_in(chart, params, "T0*S"),
                                               chart.dimension(), params.values);
    const SystemInstance sys = SystemInstance::make(chart, h, ForceSpec{}, FluxSpec{}, params);
    const Trajectory traj =
        integrate(sys, std::vector<double>{0.4, -0.3, 0.2}, rk4_config(1e-2, 1.0));
    for (const auto& x : traj.states) {
        CHECK(x[0] == 0.4);
        CHECK(x[1] == -0.3);
        CHECK(x[2] == 0.2);
    }
}

TEST_CASE("fixed and adaptive schemes agree") {
    const SystemInstance sys = damped_oscillator();
    const std::vector<double> x0 = {1.0, 0.3, 0.0};
    const Trajectory fixed = integrate(sys, x0, rk4_config(1e-3, 1.0));
    IntegratorConfig adaptive;
    adaptive.scheme = IntegratorConfig::Scheme::Rk45;
    adaptive.rel_tol = 1e-10;
    adaptive.abs_tol = 1e-12;
    adaptive.t_end = 1.0;
    const Trajectory free_step = integrate(sys, x0, adaptive);
    REQUIRE(!free_step.halted_early);
    CHECK(free_step.times.back() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t j = 0; j < x0.size(); ++j)
        CHECK(std::abs(fixed.states.back()[j] - free_step.states.back()[j]) <= 1e-6);
}

TEST_CASE("classical fourth-order convergence") {
    const SystemInstance sys = damped_oscillator();
    const std::vector<double> x0 = {1.0, 0.0, 0.0};
    const double t_end = 2.0;

    const Trajectory ref = integrate(sys, x0, rk4_config(1e-5, t_end));
    auto endpoint_error = [&](double dt) {
        const Trajectory traj = integrate(sys, x0, rk4_config(dt, t_end));
        double err = 0.0;
        for (std::size_t j = 0; j < x0.size(); ++j)
            err = std::max(err, std::abs(traj.states.back()[j] - ref.states.back()[j]));
        return err;
    };
    const double coarse = endpoint_error(0.02);
    const double fine = endpoint_error(0.01);
    const double ratio = coarse / fine;
    CHECK(ratio >= 12.0);
    CHECK(ratio <= 20.0);
}

TEST_CASE("invariant report on a healthy trajectory") {
    const SystemInstance sys = damped_oscillator();
    const Trajectory traj =
        integrate(sys, std::vector<double>{1.0, 0.0, 0.0}, rk4_config(1e-3, 2.0));
    const InvariantReport report = check_invariants(traj, sys);
    CHECK(report.pass());
    REQUIRE(report.find("entropy_identity"));
    CHECK(report.find("entropy_identity")->max_residual <= 1e-6);
    REQUIRE(report.find("oracle_gap"));
    REQUIRE(report.find("energy_drift"));
    REQUIRE(report.find("energy_balance"));
    REQUIRE(report.find("entropy_monotonic"));
    for (const auto& entry : report.entries) {
        CAPTURE(entry.name);
        CHECK(entry.pass);
    }
}

TEST_CASE("corrupted samples are flagged at the right index") {
    const SystemInstance sys = damped_oscillator();
    Trajectory traj =
        integrate(sys, std::vector<double>{1.0, 0.0, 0.0}, rk4_config(1e-3, 1.0));
    const std::size_t bad = 500;
    traj.states[bad][1] += 0.05; // knock the momentum off the solution
    const InvariantReport report = check_invariants(traj, sys);
    CHECK(!report.pass());
    const auto* balance = report.find("energy_balance");
    REQUIRE(balance);
    CHECK(!balance->pass);
    CHECK(std::abs(static_cast<double>(balance->at_index) - static_cast<double>(bad)) <= 1.0);
    const auto* drift = report.find("energy_drift");
    REQUIRE(drift);
    CHECK(!drift->pass);
    CHECK(drift->at_index == bad);
}

TEST_CASE("two-compartment conduction trajectory") {
    const TestSystem ts = make_nonsimple_system();
    const ChartSpec& chart = ts.sys.chart();
    // q, p, W1, W2, N1, N2, Gamma1, Gamma2, S1, S2, Sigma1, Sigma2
    const std::vector<double> x0 = {0.5, 0.0, 0.0, 0.0, 1.2, 0.9,
                                    0.0, 0.0, 1.4, 0.7, 0.2, -0.1};
    const Trajectory traj = integrate(ts.sys, x0, rk4_config(1e-3, 4.0));
    REQUIRE(!traj.halted_early);

    double prev_total = -1e300;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const auto& x = traj.states[i];
        const double total = x[chart.s_index(0)] + x[chart.s_index(1)];
        CHECK(total >= prev_total - 1e-10);
        prev_total = total;
        CHECK(std::abs(x[chart.n_index(0)] + x[chart.n_index(1)] - (1.2 + 0.9)) <= 1e-10);
        for (std::size_t a = 0; a < 2; ++a) {
            const double gap0 = x0[chart.s_index(a)] - x0[chart.sigma_index(a)];
            CHECK(std::abs(x[chart.s_index(a)] - x[chart.sigma_index(a)] - gap0) <= 1e-7);
        }
    }
    // temperatures approach each other under conduction
    const auto& xe = traj.states.back();
    const double t1_0 = 1.0 * x0[chart.s_index(0)], t2_0 = 1.3 * x0[chart.s_index(1)];
    const double t1_e = 1.0 * xe[chart.s_index(0)], t2_e = 1.3 * xe[chart.s_index(1)];
    CHECK(std::abs(t1_e - t2_e) < std::abs(t1_0 - t2_0));

    const InvariantReport report = check_invariants(traj, ts.sys);
    for (const auto& entry : report.entries) {
        CAPTURE(entry.name);
        CHECK(entry.pass);
    }
}

TEST_CASE("open system bookkeeping along a trajectory") {
    const TestSystem ts = make_open_system();
    const std::vector<double> x0 = {0.6, 0.0, 0.0, 1.0, 0.0, 0.3, 0.0};
    const Trajectory traj = integrate(ts.sys, x0, rk4_config(1e-3, 2.0));
    REQUIRE(!traj.halted_early);
    const InvariantReport report = check_invariants(traj, ts.sys);
    REQUIRE(report.find("entropy_bookkeeping"));
    CHECK(report.find("entropy_bookkeeping")->pass);
    REQUIRE(report.find("oracle_gap"));
    CHECK(report.find("oracle_gap")->pass);
}

TEST_CASE("integration halts early when the temperature collapses") {
    // dH/dS = S: driving S toward zero degenerates the structure
    ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
    ParameterSet params{{"lam"}, {0.5}};
    auto h = std::make_shared<ExprScalarField>(
        parse_in(chart, params, "p^2/2 + q^2/2 + S^2/2"), chart.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{parse_in(chart, params, "lam*p")}}; // anti-dissipative on purpose
    const SystemInstance sys = SystemInstance::make(chart, h, forces, FluxSpec{}, params);

    const Trajectory traj =
        integrate(sys, std::vector<double>{1.0, 0.8, 0.4}, rk4_config(1e-3, 50.0));
    CHECK(traj.halted_early);
    CHECK(!traj.halt_reason.empty());
    CHECK(traj.size() > 10);            // partial history retained
    CHECK(traj.times.back() < 50.0);
}

TEST_CASE("non-finite states are reported as errors") {
    // xdot = x^2 blows up in finite time
    const VectorField field = [](std::span<const double> x) {
        return std::vector<double>{x[0] * x[0]};
    };
    IntegratorConfig cfg = rk4_config(1e-2, 10.0);
    CHECK_THROWS_AS(integrate(field, std::vector<double>{1.0}, cfg), NonFiniteState);
}

TEST_CASE("adaptive step underflow is a step failure") {
    // oscillation fast enough that no representable step resolves it
    const VectorField field = [](std::span<const double> x) {
        return std::vector<double>{std::cos(6e11 * x[0]) + 1.5};
    };
    IntegratorConfig cfg;
    cfg.scheme = IntegratorConfig::Scheme::Rk45;
    cfg.rel_tol = 1e-12;
    cfg.abs_tol = 1e-14;
    cfg.t_end = 1.0;
    cfg.max_steps = 100000;
    CHECK_THROWS_AS(integrate(field, std::vector<double>{0.1}, cfg), StepFailure);
}
