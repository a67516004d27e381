#include "cosym/legendre.hpp"

#include "cosym/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>

namespace cosym {

double lagrangian_energy(const LagrangianSpec& lag, std::span<const double> vstate) {
    const ChartSpec& chart = lag.velocity_chart;
    const expr::EvalGrad gl = lag.lagrangian->value_and_gradient(vstate);
    double energy = -gl.value;
    for (std::size_t i = 0; i < chart.pairs; ++i)
        energy += vstate[chart.p_index(i)] * gl.gradient[chart.p_index(i)];
    return energy;
}

LegendreMap::LegendreMap(LagrangianSpec spec)
    : spec_(std::move(spec)), momentum_chart_(spec_.velocity_chart.momentum_variant()) {
    if (!spec_.lagrangian) throw Error("Legendre map needs a Lagrangian");
    if (spec_.lagrangian->dimension() != spec_.velocity_chart.dimension())
        throw Error("Lagrangian dimension does not match the velocity chart");
    if (!spec_.velocity_chart.velocity_side)
        throw Error("Legendre map expects a velocity-side chart");
}

std::vector<double> LegendreMap::forward_unchecked(std::span<const double> vstate) const {
    const ChartSpec& chart = spec_.velocity_chart;
    const expr::EvalGrad gl = spec_.lagrangian->value_and_gradient(vstate);
    std::vector<double> out(vstate.begin(), vstate.end());
    for (std::size_t i = 0; i < chart.pairs; ++i)
        out[chart.p_index(i)] = gl.gradient[chart.p_index(i)];
    return out;
}

linalg::Matrix LegendreMap::velocity_hessian(std::span<const double> vstate) const {
    const ChartSpec& chart = spec_.velocity_chart;
    const std::size_t n = chart.pairs;
    linalg::Matrix hess(n, n);
    std::vector<double> x(vstate.begin(), vstate.end());
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t slot = chart.p_index(j);
        const double saved = x[slot];
        x[slot] = saved + kJacobianStep;
        const expr::EvalGrad plus = spec_.lagrangian->value_and_gradient(x);
        x[slot] = saved - kJacobianStep;
        const expr::EvalGrad minus = spec_.lagrangian->value_and_gradient(x);
        x[slot] = saved;
        for (std::size_t i = 0; i < n; ++i)
            hess(i, j) = (plus.gradient[chart.p_index(i)] - minus.gradient[chart.p_index(i)]) /
                         (2.0 * kJacobianStep);
    }
    return hess;
}

namespace {

// condition with the norm floored at the unit scale, so a Hessian that
// collapses toward zero (degenerate kinetic term) registers as singular
// instead of looking perfectly conditioned
double hessian_condition(const linalg::Matrix& hess) {
    const linalg::LuDecomposition lu(hess);
    if (lu.singular()) return std::numeric_limits<double>::infinity();
    return std::max(hess.norm1(), 1.0) * lu.inverse().norm1();
}

} // namespace

std::vector<double> LegendreMap::forward(std::span<const double> vstate) const {
    const double cond = hessian_condition(velocity_hessian(vstate));
    if (!(cond < kHessianConditionLimit)) throw SingularLegendre(cond);
    return forward_unchecked(vstate);
}

std::vector<double> LegendreMap::inverse(std::span<const double> mstate) const {
    const ChartSpec& vchart = spec_.velocity_chart;
    const std::size_t n = vchart.pairs;

    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) target[i] = mstate[momentum_chart_.p_index(i)];
    const double scale = 1.0 + linalg::norm_inf(target);

    // identity-metric initial guess: qdot = p
    std::vector<double> x(mstate.begin(), mstate.end());

    auto residual = [&](const std::vector<double>& state) {
        const expr::EvalGrad gl = spec_.lagrangian->value_and_gradient(state);
        std::vector<double> g(n);
        for (std::size_t i = 0; i < n; ++i) g[i] = gl.gradient[vchart.p_index(i)] - target[i];
        return g;
    };

    std::vector<double> g = residual(x);
    double gnorm = linalg::norm_inf(g);

    for (int iter = 0; iter < kNewtonMaxIterations; ++iter) {
        if (gnorm <= kNewtonTolerance * scale) return x;

        const linalg::Matrix hess = velocity_hessian(x);
        const linalg::LuDecomposition lu(hess);
        const double cond = linalg::condition_1(hess, lu);
        if (!(cond < kHessianConditionLimit)) throw SingularLegendre(cond);

        std::vector<double> neg_g(n);
        for (std::size_t i = 0; i < n; ++i) neg_g[i] = -g[i];
        const std::vector<double> delta = lu.solve(neg_g);

        double alpha = 1.0;
        bool improved = false;
        std::vector<double> trial = x;
        for (int back = 0; back < 40; ++back) {
            for (std::size_t i = 0; i < n; ++i)
                trial[vchart.p_index(i)] = x[vchart.p_index(i)] + alpha * delta[i];
            std::vector<double> gt = residual(trial);
            const double tnorm = linalg::norm_inf(gt);
            if (tnorm < gnorm) {
                x = trial;
                g = std::move(gt);
                gnorm = tnorm;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!improved) throw NewtonDivergence("fiber derivative inverse stalled", x);
    }
    if (gnorm <= kNewtonTolerance * scale) return x;
    throw NewtonDivergence("fiber derivative inverse did not converge", x);
}

linalg::Matrix LegendreMap::jacobian(std::span<const double> vstate) const {
    const std::size_t d = vstate.size();
    linalg::Matrix jac(d, d);
    std::vector<double> x(vstate.begin(), vstate.end());
    for (std::size_t j = 0; j < d; ++j) {
        const double saved = x[j];
        x[j] = saved + kJacobianStep;
        const std::vector<double> plus = forward_unchecked(x);
        x[j] = saved - kJacobianStep;
        const std::vector<double> minus = forward_unchecked(x);
        x[j] = saved;
        for (std::size_t i = 0; i < d; ++i)
            jac(i, j) = (plus[i] - minus[i]) / (2.0 * kJacobianStep);
    }
    return jac;
}

LegendreHamiltonian::LegendreHamiltonian(std::shared_ptr<const LegendreMap> map)
    : map_(std::move(map)) {}

std::size_t LegendreHamiltonian::dimension() const {
    return map_->momentum_chart().dimension();
}

double LegendreHamiltonian::value(std::span<const double> state) const {
    return lagrangian_energy(map_->spec(), map_->inverse(state));
}

expr::EvalGrad LegendreHamiltonian::value_and_gradient(std::span<const double> state) const {
    const ChartSpec& vchart = map_->velocity_chart();
    const std::vector<double> vstate = map_->inverse(state);
    const expr::EvalGrad gl = map_->spec().lagrangian->value_and_gradient(vstate);

    expr::EvalGrad out;
    out.gradient.assign(state.size(), 0.0);
    out.value = -gl.value;
    for (std::size_t i = 0; i < vchart.pairs; ++i)
        out.value += vstate[vchart.p_index(i)] * gl.gradient[vchart.p_index(i)];

    for (std::size_t j = 0; j < state.size(); ++j) out.gradient[j] = -gl.gradient[j];
    for (std::size_t i = 0; i < vchart.pairs; ++i)
        out.gradient[vchart.p_index(i)] = vstate[vchart.p_index(i)]; // dH/dp = qdot
    return out;
}

LagrangianSystem::LagrangianSystem(std::shared_ptr<const LegendreMap> map, ForceSpec forces,
                                   FluxSpec fluxes, ParameterSet params)
    : map_(std::move(map)),
      forces_(std::move(forces)),
      fluxes_(std::move(fluxes)),
      params_(std::move(params)),
      momentum_omega_(build_two_form(map_->momentum_chart())) {}

LagrangianSystem LagrangianSystem::make(ChartSpec momentum_chart,
                                        std::shared_ptr<const ScalarField> lagrangian,
                                        ForceSpec forces, FluxSpec fluxes, ParameterSet params) {
    ChartSpec velocity = momentum_chart.velocity_variant();
    if (const auto* ef = dynamic_cast<const ExprScalarField*>(lagrangian.get())) {
        const std::vector<std::string> vocab = params.vocabulary(velocity);
        if (ef->ast().vocabulary() != vocab)
            throw LayoutMismatch("Lagrangian was parsed against a different vocabulary");
        for (const std::string& name : velocity.displacement_names())
            if (ef->ast().references(name))
                throw LayoutMismatch(
                    "Lagrangian must not depend on displacement coordinate '" + name + "'");
    }
    auto map = std::make_shared<const LegendreMap>(
        LagrangianSpec{std::move(lagrangian), std::move(velocity)});

    // the momentum-side constructor validates force/flux shapes and
    // dependence rules against the same chart the laws are written in
    SystemInstance::make(momentum_chart, std::make_shared<LegendreHamiltonian>(map), forces,
                         fluxes, params);
    return LagrangianSystem(std::move(map), std::move(forces), std::move(fluxes),
                            std::move(params));
}

double LagrangianSystem::energy(std::span<const double> vstate) const {
    return lagrangian_energy(map_->spec(), vstate);
}

StateIngredients LagrangianSystem::ingredients(std::span<const double> vstate) const {
    return ingredients_with_jacobian(vstate, map_->jacobian(vstate));
}

StateIngredients LagrangianSystem::ingredients_with_jacobian(std::span<const double> vstate,
                                                             const linalg::Matrix& jac) const {
    const ChartSpec& vchart = map_->velocity_chart();
    const std::size_t d = vchart.dimension();
    const expr::EvalGrad gl = map_->spec().lagrangian->value_and_gradient(vstate);

    // coefficient laws are momentum-side functions composed with the map
    const std::vector<double> mstate = map_->forward_unchecked(vstate);
    std::vector<double> point(mstate.begin(), mstate.end());
    point.insert(point.end(), params_.values.begin(), params_.values.end());

    StateIngredients in;
    const std::size_t p = vchart.eta_count();
    in.temperatures.resize(p);
    for (std::size_t k = 0; k < p; ++k)
        in.temperatures[k] = -gl.gradient[vchart.s_index(k)]; // dH/dS = -dL/dS

    // E_L and its differential: dE_L = qdot^i d(dL/dqdot^i) + (dL/dqdot^i) dqdot^i - dL,
    // where d(dL/dqdot^i) is the p_i row of the fiber-derivative Jacobian.
    in.energy = -gl.value;
    in.differential.assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) in.differential[j] = -gl.gradient[j];
    for (std::size_t i = 0; i < vchart.pairs; ++i) {
        const double qdot = vstate[vchart.p_index(i)];
        in.energy += qdot * gl.gradient[vchart.p_index(i)];
        for (std::size_t j = 0; j < d; ++j)
            in.differential[j] += qdot * jac(vchart.p_index(i), j);
        in.differential[vchart.p_index(i)] += gl.gradient[vchart.p_index(i)];
    }

    in.friction.assign(p, std::vector<double>(vchart.pairs, 0.0));
    if (!forces_.friction.empty())
        for (std::size_t k = 0; k < p; ++k)
            for (std::size_t i = 0; i < vchart.pairs; ++i)
                in.friction[k][i] = expr::eval(forces_.friction[k][i], point);

    in.external.assign(vchart.pairs, 0.0);
    for (std::size_t i = 0; i < forces_.external.size(); ++i)
        in.external[i] = expr::eval(forces_.external[i], point);

    in.matter_flux.assign(vchart.compartments, 0.0);
    for (const auto& entry : fluxes_.matter) {
        const double rate = expr::eval(entry.rate, point);
        in.matter_flux[entry.to] += rate;
        in.matter_flux[entry.from] -= rate;
    }

    if (vchart.system_class == SystemClass::NonSimple) {
        in.heat_flux = linalg::Matrix(p, p);
        for (const auto& entry : fluxes_.heat)
            in.heat_flux(entry.row, entry.col) = expr::eval(entry.rate, point);
        for (std::size_t b = 0; b < p; ++b) {
            double col = 0.0;
            for (std::size_t a = 0; a < p; ++a)
                if (a != b) col += in.heat_flux(a, b);
            in.heat_flux(b, b) = -col;
        }
    }

    if (vchart.system_class == SystemClass::OpenSimple) {
        for (const auto& port : fluxes_.ports) {
            const double flow = expr::eval(port.flow, point);
            const double mu = expr::eval(port.chemical_potential, point);
            const double temp = expr::eval(port.temperature, point);
            const double molar_s = expr::eval(port.molar_entropy, point);
            const double entropy_flow = flow * molar_s;
            in.port_flow.push_back(flow);
            in.port_mu.push_back(mu);
            in.port_temperature.push_back(temp);
            in.port_molar_entropy.push_back(molar_s);
            in.port_entropy_flow.push_back(entropy_flow);
            in.port_flow_total += flow;
            in.port_entropy_flow_total += entropy_flow;
            in.external_power += flow * mu + entropy_flow * temp;
        }
        for (const auto& source : fluxes_.sources) {
            const double flow = expr::eval(source.entropy_flow, point);
            const double temp = expr::eval(source.temperature, point);
            in.source_entropy_flow.push_back(flow);
            in.source_temperature.push_back(temp);
            in.port_entropy_flow_total += flow;
            in.external_power += flow * temp;
        }
    }
    return in;
}

std::vector<Covector> LagrangianSystem::build_etas(std::span<const double> vstate) const {
    return detail::assemble_etas(map_->velocity_chart(), ingredients(vstate));
}

std::vector<double> LagrangianSystem::evolution_field(std::span<const double> vstate) const {
    const ChartSpec& vchart = map_->velocity_chart();

    const linalg::Matrix hess = map_->velocity_hessian(vstate);
    const double cond = hessian_condition(hess);
    if (!(cond < kHessianConditionLimit)) throw SingularLegendre(cond);

    const linalg::Matrix jac = map_->jacobian(vstate);
    const StateIngredients in = ingredients_with_jacobian(vstate, jac);
    for (std::size_t k = 0; k < in.temperatures.size(); ++k)
        if (in.temperatures[k] == 0.0)
            throw TemperatureDegenerate(k, vchart.coordinates[vchart.s_index(k)]);

    // Omega_L as the numeric pullback of omega through the fiber derivative
    TwoFormMatrix pulled{jac.transposed() * momentum_omega_.w * jac};

    const std::vector<Covector> etas = detail::assemble_etas(vchart, in);
    const Covector rhs = detail::assemble_rhs(vchart, in, etas);
    const FlatOperator flat(pulled, etas);
    return flat.solve(rhs);
}

SystemInstance LagrangianSystem::hamiltonian_system() const {
    return SystemInstance::make(map_->momentum_chart(),
                                std::make_shared<LegendreHamiltonian>(map_), forces_, fluxes_,
                                params_);
}

std::map<std::string, double> LagrangianSystem::diagnostics(std::span<const double> vstate,
                                                            std::span<const double> xdot) const {
    const ChartSpec& vchart = map_->velocity_chart();
    const linalg::Matrix jac = map_->jacobian(vstate);
    const StateIngredients in = ingredients_with_jacobian(vstate, jac);
    const expr::EvalGrad gl = map_->spec().lagrangian->value_and_gradient(vstate);

    std::map<std::string, double> out;
    out["E_L"] = in.energy;

    const std::vector<double> residuals =
        detail::entropy_identity_residuals(vchart, in, xdot);
    if (residuals.size() == 1) {
        out["entropy_residual"] = residuals[0];
    } else {
        for (std::size_t k = 0; k < residuals.size(); ++k)
            out["entropy_residual_" + std::to_string(k + 1)] = residuals[k];
    }

    double de_dt = 0.0;
    for (std::size_t j = 0; j < vchart.dimension(); ++j) de_dt += in.differential[j] * xdot[j];
    double external_power = in.external_power;
    for (std::size_t i = 0; i < vchart.pairs; ++i)
        external_power += in.external[i] * xdot[vchart.q_index(i)];
    out["energy_balance"] = de_dt - external_power;

    // forced Euler-Lagrange residual: d/dt(dL/dqdot_i) along the field
    // minus dL/dq_i minus the forces
    double el_max = 0.0;
    for (std::size_t i = 0; i < vchart.pairs; ++i) {
        double momentum_rate = 0.0;
        for (std::size_t j = 0; j < vchart.dimension(); ++j)
            momentum_rate += jac(vchart.p_index(i), j) * xdot[j];
        double force = in.external[i];
        for (std::size_t k = 0; k < vchart.eta_count(); ++k) force += in.friction[k][i];
        el_max = std::max(el_max,
                          std::abs(momentum_rate - gl.gradient[vchart.q_index(i)] - force));
    }
    out["euler_lagrange_residual"] = el_max;

    // the field must be a second-order equation in q
    double sode_max = 0.0;
    for (std::size_t i = 0; i < vchart.pairs; ++i)
        sode_max = std::max(sode_max,
                            std::abs(xdot[vchart.q_index(i)] - vstate[vchart.p_index(i)]));
    out["sode_residual"] = sode_max;

    double min_t = std::abs(in.temperatures[0]);
    for (double t : in.temperatures) min_t = std::min(min_t, std::abs(t));
    out["min_temperature"] = min_t;

    if (vchart.compartments > 0) {
        double sum_n = 0.0;
        for (std::size_t k = 0; k < vchart.compartments; ++k) sum_n += vstate[vchart.n_index(k)];
        out["sum_N"] = sum_n;
        double thermal_max = 0.0;
        for (std::size_t k = 0; k < vchart.compartments; ++k)
            thermal_max = std::max(thermal_max, std::abs(xdot[vchart.w_index(k)] +
                                                         gl.gradient[vchart.n_index(k)]));
        out["displacement_residual"] = thermal_max; // dW/dt = -dL/dN
    }
    if (vchart.system_class == SystemClass::NonSimple) {
        for (std::size_t a = 0; a < vchart.subsystems; ++a)
            out["gauge_gap_" + std::to_string(a + 1)] =
                vstate[vchart.s_index(a)] - vstate[vchart.sigma_index(a)];
    }
    if (vchart.system_class == SystemClass::OpenSimple) {
        out["bookkeeping_residual"] = xdot[vchart.s_index(0)] - xdot[vchart.sigma_index(0)] -
                                      in.port_entropy_flow_total;
    }
    return out;
}

} // namespace cosym
