#include "cosym/systems.hpp"

#include "cosym/errors.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <set>

namespace cosym {

std::vector<std::string> ParameterSet::vocabulary(const ChartSpec& chart) const {
    std::vector<std::string> vocab = chart.coordinates;
    vocab.insert(vocab.end(), names.begin(), names.end());
    return vocab;
}

namespace detail {

std::vector<Covector> assemble_etas(const ChartSpec& chart, const StateIngredients& in) {
    const std::size_t d = chart.dimension();
    const std::size_t p = chart.eta_count();
    std::vector<Covector> etas(p, Covector(d));

    switch (chart.system_class) {
    case SystemClass::SimpleClosed:
        etas[0][chart.s_index(0)] = -in.temperatures[0];
        break;
    case SystemClass::MassTransfer:
        etas[0][chart.s_index(0)] = -in.temperatures[0];
        for (std::size_t k = 0; k < chart.compartments; ++k)
            etas[0][chart.w_index(k)] = -in.matter_flux[k];
        break;
    case SystemClass::NonSimple:
        // no sum over A in the dSigma_A and dW^A terms
        for (std::size_t a = 0; a < p; ++a) {
            etas[a][chart.sigma_index(a)] = -in.temperatures[a];
            etas[a][chart.w_index(a)] = -in.matter_flux[a];
            for (std::size_t b = 0; b < p; ++b)
                etas[a][chart.gamma_index(b)] -= in.heat_flux(a, b);
        }
        break;
    case SystemClass::OpenSimple:
        etas[0][chart.sigma_index(0)] = -in.temperatures[0];
        etas[0][chart.w_index(0)] = -in.port_flow_total;
        etas[0][chart.gamma_index(0)] = -in.port_entropy_flow_total;
        break;
    }

    for (std::size_t k = 0; k < p; ++k)
        for (std::size_t i = 0; i < chart.pairs; ++i)
            etas[k][chart.q_index(i)] -= in.friction[k][i];
    return etas;
}

Covector assemble_rhs(const ChartSpec& chart, const StateIngredients& in,
                      const std::vector<Covector>& etas) {
    const std::size_t d = chart.dimension();
    Covector rhs(d);
    for (std::size_t j = 0; j < d; ++j) rhs[j] = in.differential[j];
    for (const Covector& eta : etas)
        for (std::size_t j = 0; j < d; ++j) rhs[j] += eta[j];
    for (std::size_t i = 0; i < chart.pairs; ++i) rhs[chart.q_index(i)] -= in.external[i];
    if (chart.system_class == SystemClass::OpenSimple && in.external_power != 0.0)
        for (std::size_t j = 0; j < d; ++j) rhs[j] -= in.external_power * etas[0][j];
    return rhs;
}

std::vector<double> entropy_identity_residuals(const ChartSpec& chart,
                                               const StateIngredients& in,
                                               std::span<const double> xdot) {
    const std::size_t p = chart.eta_count();
    std::vector<double> residuals(p, 0.0);

    auto friction_power = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t i = 0; i < chart.pairs; ++i)
            s += xdot[chart.q_index(i)] * in.friction[k][i];
        return s;
    };

    switch (chart.system_class) {
    case SystemClass::SimpleClosed:
        residuals[0] = -in.temperatures[0] * xdot[chart.s_index(0)] - friction_power(0);
        break;
    case SystemClass::MassTransfer: {
        double transfer = 0.0;
        for (std::size_t k = 0; k < chart.compartments; ++k)
            transfer += in.matter_flux[k] * in.differential[chart.n_index(k)];
        residuals[0] =
            -in.temperatures[0] * xdot[chart.s_index(0)] - friction_power(0) - transfer;
        break;
    }
    case SystemClass::NonSimple:
        for (std::size_t k = 0; k < p; ++k) {
            double conduction = 0.0;
            for (std::size_t a = 0; a < p; ++a)
                conduction += in.heat_flux(k, a) * (in.temperatures[a] - in.temperatures[k]);
            const double transfer = in.matter_flux[k] * in.differential[chart.n_index(k)];
            residuals[k] = -in.temperatures[k] * xdot[chart.s_index(k)] -
                           (friction_power(k) + conduction + transfer);
        }
        break;
    case SystemClass::OpenSimple: {
        const double mu_dot_w = in.port_flow_total * xdot[chart.w_index(0)];
        const double gamma_term = in.port_entropy_flow_total * xdot[chart.gamma_index(0)];
        residuals[0] = -in.temperatures[0] * xdot[chart.sigma_index(0)] -
                       (friction_power(0) + mu_dot_w + gamma_term - in.external_power);
        break;
    }
    }
    return residuals;
}

} // namespace detail

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw LayoutMismatch(message);
}

void check_dependencies(const expr::Ast& ast, const std::vector<std::string>& excluded,
                        const std::string& what) {
    for (const std::string& name : excluded)
        if (ast.references(name))
            throw LayoutMismatch(what + " must not depend on displacement coordinate '" + name +
                                 "'");
}

void check_vocabulary(const expr::Ast& ast, const std::vector<std::string>& expected,
                      const std::string& what) {
    if (ast.vocabulary() != expected)
        throw LayoutMismatch(what + " was parsed against a different vocabulary");
}

} // namespace

SystemInstance::SystemInstance(ChartSpec chart, std::shared_ptr<const ScalarField> hamiltonian,
                               ForceSpec forces, FluxSpec fluxes, ParameterSet params)
    : chart_(std::move(chart)),
      hamiltonian_(std::move(hamiltonian)),
      forces_(std::move(forces)),
      fluxes_(std::move(fluxes)),
      params_(std::move(params)),
      omega_(build_two_form(chart_)) {}

SystemInstance SystemInstance::make(ChartSpec chart, std::shared_ptr<const ScalarField> hamiltonian,
                                    ForceSpec forces, FluxSpec fluxes, ParameterSet params) {
    require(hamiltonian != nullptr, "system needs a Hamiltonian");
    require(hamiltonian->dimension() == chart.dimension(),
            "Hamiltonian dimension does not match the chart");
    require(params.names.size() == params.values.size(), "parameter names/values mismatch");

    const std::vector<std::string> vocab = params.vocabulary(chart);
    const std::vector<std::string> excluded = chart.displacement_names();

    if (const auto* ef = dynamic_cast<const ExprScalarField*>(hamiltonian.get())) {
        check_vocabulary(ef->ast(), vocab, "Hamiltonian");
        check_dependencies(ef->ast(), excluded, "Hamiltonian");
    }

    const std::size_t p = chart.eta_count();
    if (!forces.friction.empty()) {
        require(forces.friction.size() == p, "friction needs one row per eta");
        for (const auto& row : forces.friction) {
            require(row.size() == chart.pairs, "friction row needs one component per pair");
            for (const auto& ast : row) {
                check_vocabulary(ast, vocab, "friction component");
                check_dependencies(ast, excluded, "friction component");
            }
        }
    }
    if (!forces.external.empty()) {
        require(forces.external.size() == chart.pairs,
                "external force needs one component per pair");
        for (const auto& ast : forces.external) {
            check_vocabulary(ast, vocab, "external force component");
            check_dependencies(ast, excluded, "external force component");
        }
    }

    std::set<std::pair<std::size_t, std::size_t>> seen_matter;
    for (const auto& entry : fluxes.matter) {
        require(chart.compartments > 0, "matter flux needs compartments");
        require(entry.from < entry.to, "matter flux stores only the lower-index ordering");
        require(entry.to < chart.compartments, "matter flux index out of range");
        require(seen_matter.insert({entry.from, entry.to}).second, "duplicate matter flux entry");
        check_vocabulary(entry.rate, vocab, "matter flux");
        check_dependencies(entry.rate, excluded, "matter flux");
    }
    std::set<std::pair<std::size_t, std::size_t>> seen_heat;
    for (const auto& entry : fluxes.heat) {
        require(chart.system_class == SystemClass::NonSimple, "heat flux needs subsystems");
        require(entry.row != entry.col, "heat flux diagonal is derived, not supplied");
        require(entry.row < p && entry.col < p, "heat flux index out of range");
        require(seen_heat.insert({entry.row, entry.col}).second, "duplicate heat flux entry");
        check_vocabulary(entry.rate, vocab, "heat flux");
        check_dependencies(entry.rate, excluded, "heat flux");
    }
    require(fluxes.ports.empty() || chart.system_class == SystemClass::OpenSimple,
            "ports only exist for open systems");
    require(fluxes.ports.size() == chart.ports, "port laws must match declared port count");
    require(fluxes.sources.size() == chart.heat_sources,
            "heat source laws must match declared source count");
    for (const auto& port : fluxes.ports) {
        // port laws may reference the full state (displacements included)
        for (const expr::Ast* ast :
             {&port.flow, &port.chemical_potential, &port.temperature, &port.molar_entropy})
            check_vocabulary(*ast, vocab, "port law");
    }
    for (const auto& s : fluxes.sources)
        for (const expr::Ast* ast : {&s.entropy_flow, &s.temperature})
            check_vocabulary(*ast, vocab, "heat source law");

    return SystemInstance(std::move(chart), std::move(hamiltonian), std::move(forces),
                          std::move(fluxes), std::move(params));
}

std::vector<double> SystemInstance::full_point(std::span<const double> state) const {
    std::vector<double> point(state.begin(), state.end());
    point.insert(point.end(), params_.values.begin(), params_.values.end());
    return point;
}

StateIngredients SystemInstance::ingredients(std::span<const double> state) const {
    if (state.size() != chart_.dimension()) throw Error("state has wrong dimension");

    StateIngredients in;
    expr::EvalGrad h = hamiltonian_->value_and_gradient(state);
    in.energy = h.value;
    in.differential = std::move(h.gradient);

    const std::size_t p = chart_.eta_count();
    in.temperatures.resize(p);
    for (std::size_t k = 0; k < p; ++k) in.temperatures[k] = in.differential[chart_.s_index(k)];

    const std::vector<double> point = full_point(state);

    in.friction.assign(p, std::vector<double>(chart_.pairs, 0.0));
    if (!forces_.friction.empty())
        for (std::size_t k = 0; k < p; ++k)
            for (std::size_t i = 0; i < chart_.pairs; ++i)
                in.friction[k][i] = expr::eval(forces_.friction[k][i], point);

    in.external.assign(chart_.pairs, 0.0);
    for (std::size_t i = 0; i < forces_.external.size(); ++i)
        in.external[i] = expr::eval(forces_.external[i], point);

    in.matter_flux.assign(chart_.compartments, 0.0);
    for (const auto& entry : fluxes_.matter) {
        const double rate = expr::eval(entry.rate, point);
        in.matter_flux[entry.to] += rate;  // J_{from,to} enters the 'to' sum
        in.matter_flux[entry.from] -= rate; // antisymmetric mirror
    }

    if (chart_.system_class == SystemClass::NonSimple) {
        in.heat_flux = linalg::Matrix(p, p);
        for (const auto& entry : fluxes_.heat)
            in.heat_flux(entry.row, entry.col) = expr::eval(entry.rate, point);
        // diagonal = minus the column sum of the off-diagonal entries
        for (std::size_t b = 0; b < p; ++b) {
            double col = 0.0;
            for (std::size_t a = 0; a < p; ++a)
                if (a != b) col += in.heat_flux(a, b);
            in.heat_flux(b, b) = -col;
        }
    }

    if (chart_.system_class == SystemClass::OpenSimple) {
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

std::vector<Covector> SystemInstance::build_etas(std::span<const double> state) const {
    return detail::assemble_etas(chart_, ingredients(state));
}

Covector SystemInstance::assemble_rhs(std::span<const double> state) const {
    const StateIngredients in = ingredients(state);
    return detail::assemble_rhs(chart_, in, detail::assemble_etas(chart_, in));
}

void SystemInstance::check_temperatures(const StateIngredients& in) const {
    for (std::size_t k = 0; k < in.temperatures.size(); ++k)
        if (in.temperatures[k] == 0.0)
            throw TemperatureDegenerate(k, chart_.coordinates[chart_.s_index(k)]);
}

std::vector<double> SystemInstance::evolution_field(std::span<const double> state) const {
    const StateIngredients in = ingredients(state);
    check_temperatures(in);
    const std::vector<Covector> etas = detail::assemble_etas(chart_, in);
    const Covector rhs = detail::assemble_rhs(chart_, in, etas);
    const FlatOperator flat(omega_, etas);
    return flat.solve(rhs);
}

std::vector<double> SystemInstance::explicit_rhs_oracle(std::span<const double> state) const {
    const StateIngredients in = ingredients(state);
    check_temperatures(in);

    const std::size_t d = chart_.dimension();
    std::vector<double> out(d, 0.0);

    // mechanical block, shared by every class
    for (std::size_t i = 0; i < chart_.pairs; ++i) {
        out[chart_.q_index(i)] = in.differential[chart_.p_index(i)];
        double force = in.external[i];
        for (std::size_t k = 0; k < chart_.eta_count(); ++k) force += in.friction[k][i];
        out[chart_.p_index(i)] = -in.differential[chart_.q_index(i)] + force;
    }

    auto friction_power = [&](std::size_t k) {
        double s = 0.0;
        for (std::size_t j = 0; j < chart_.pairs; ++j)
            s += in.differential[chart_.p_index(j)] * in.friction[k][j];
        return s;
    };

    switch (chart_.system_class) {
    case SystemClass::SimpleClosed:
        out[chart_.s_index(0)] = -friction_power(0) / in.temperatures[0];
        break;
    case SystemClass::MassTransfer: {
        double transfer = 0.0;
        for (std::size_t k = 0; k < chart_.compartments; ++k) {
            out[chart_.w_index(k)] = in.differential[chart_.n_index(k)];
            out[chart_.n_index(k)] = in.matter_flux[k];
            transfer += in.matter_flux[k] * in.differential[chart_.n_index(k)];
        }
        out[chart_.s_index(0)] = -(friction_power(0) + transfer) / in.temperatures[0];
        break;
    }
    case SystemClass::NonSimple:
        for (std::size_t k = 0; k < chart_.subsystems; ++k) {
            out[chart_.w_index(k)] = in.differential[chart_.n_index(k)];
            out[chart_.n_index(k)] = in.matter_flux[k];
            out[chart_.gamma_index(k)] = in.temperatures[k];
            double conduction = 0.0;
            for (std::size_t a = 0; a < chart_.subsystems; ++a)
                conduction += in.temperatures[a] * in.heat_flux(k, a);
            const double transfer = in.matter_flux[k] * in.differential[chart_.n_index(k)];
            const double rate =
                -(friction_power(k) + transfer + conduction) / in.temperatures[k];
            out[chart_.s_index(k)] = rate;  // dS_k/dt = dSigma_k/dt
            out[chart_.sigma_index(k)] = rate;
        }
        break;
    case SystemClass::OpenSimple: {
        out[chart_.w_index(0)] = in.differential[chart_.n_index(0)];
        out[chart_.n_index(0)] = in.port_flow_total;
        out[chart_.gamma_index(0)] = in.temperatures[0];
        const double sigma_rate = -(friction_power(0) +
                                    in.port_flow_total * in.differential[chart_.n_index(0)] +
                                    in.port_entropy_flow_total * in.temperatures[0] -
                                    in.external_power) /
                                  in.temperatures[0];
        out[chart_.sigma_index(0)] = sigma_rate;
        out[chart_.s_index(0)] = sigma_rate + in.port_entropy_flow_total;
        break;
    }
    }
    return out;
}

std::vector<double> SystemInstance::entropy_identity_residuals(
    std::span<const double> state, std::span<const double> xdot) const {
    return detail::entropy_identity_residuals(chart_, ingredients(state), xdot);
}

std::map<std::string, double> SystemInstance::diagnostics(std::span<const double> state,
                                                          std::span<const double> xdot) const {
    const StateIngredients in = ingredients(state);
    std::map<std::string, double> out;
    out["H"] = in.energy;

    const std::vector<double> residuals =
        detail::entropy_identity_residuals(chart_, in, xdot);
    if (residuals.size() == 1) {
        out["entropy_residual"] = residuals[0];
    } else {
        for (std::size_t k = 0; k < residuals.size(); ++k)
            out["entropy_residual_" + std::to_string(k + 1)] = residuals[k];
    }

    double dh_dt = 0.0;
    for (std::size_t j = 0; j < chart_.dimension(); ++j) dh_dt += in.differential[j] * xdot[j];
    double external_power = in.external_power;
    for (std::size_t i = 0; i < chart_.pairs; ++i)
        external_power += in.external[i] * xdot[chart_.q_index(i)];
    out["energy_balance"] = dh_dt - external_power;

    double min_t = std::abs(in.temperatures[0]);
    for (double t : in.temperatures) min_t = std::min(min_t, std::abs(t));
    out["min_temperature"] = min_t;

    double friction_power = 0.0;
    for (std::size_t k = 0; k < chart_.eta_count(); ++k)
        for (std::size_t i = 0; i < chart_.pairs; ++i)
            friction_power += in.friction[k][i] * xdot[chart_.q_index(i)];
    out["friction_power"] = friction_power;

    if (chart_.compartments > 0) {
        double sum_n = 0.0;
        for (std::size_t k = 0; k < chart_.compartments; ++k) sum_n += state[chart_.n_index(k)];
        out["sum_N"] = sum_n;
    }
    if (chart_.system_class == SystemClass::NonSimple) {
        for (std::size_t a = 0; a < chart_.subsystems; ++a)
            out["gauge_gap_" + std::to_string(a + 1)] =
                state[chart_.s_index(a)] - state[chart_.sigma_index(a)];
    }
    if (chart_.system_class == SystemClass::OpenSimple) {
        out["bookkeeping_residual"] = xdot[chart_.s_index(0)] - xdot[chart_.sigma_index(0)] -
                                      in.port_entropy_flow_total;
    }
    return out;
}

} // namespace cosym
