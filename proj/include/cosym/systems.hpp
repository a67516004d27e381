#pragma once

#include "cosym/chart.hpp"
#include "cosym/expr.hpp"
#include "cosym/geometry.hpp"
#include "cosym/scalar_field.hpp"

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cosym {

/// Named constants available to every expression of a system. Expression
/// vocabularies are always the chart coordinates followed by these names.
struct ParameterSet {
    std::vector<std::string> names;
    std::vector<double> values;

    std::vector<std::string> vocabulary(const ChartSpec& chart) const;
};

/// Friction and external forces. Both are semibasic by construction: only
/// components along the dq^i are representable. friction has one row per
/// eta (so P rows for NonSimple, one row otherwise); an empty container
/// means zero force.
struct ForceSpec {
    std::vector<std::vector<expr::Ast>> friction;
    std::vector<expr::Ast> external;
};

/// One matter port of an open system. The entropy flow rate through the
/// port is flow * molar_entropy, computed, never user-supplied.
struct PortSpec {
    expr::Ast flow;               // molar flow rate into the system
    expr::Ast chemical_potential; // mu at the port
    expr::Ast temperature;        // T at the port
    expr::Ast molar_entropy;      // molar entropy at the port
};

struct HeatSourceSpec {
    expr::Ast entropy_flow; // entropy flow rate into the system
    expr::Ast temperature;  // temperature of the source
};

/// Internal matter and heat flux laws. Antisymmetry of the matter rates is
/// structural: only the l < k entry of each pair is stored. The heat
/// matrix stores off-diagonal entries; the diagonal is minus the column
/// sum of the rest, so the column sums vanish identically.
struct FluxSpec {
    struct MatterEntry {
        std::size_t from = 0, to = 0; // 0-based compartments, from < to
        expr::Ast rate;
    };
    struct HeatEntry {
        std::size_t row = 0, col = 0; // 0-based subsystems, row != col
        expr::Ast rate;
    };

    std::vector<MatterEntry> matter;
    std::vector<HeatEntry> heat;
    std::vector<PortSpec> ports;
    std::vector<HeatSourceSpec> sources;
};

/// Everything the eta / right-hand-side assembly needs at one state. The
/// same shape serves the Hamiltonian picture and (with the energy
/// differential and composed coefficients) the Lagrangian one.
struct StateIngredients {
    double energy = 0.0;
    std::vector<double> differential;          // d of the energy function, chart basis
    std::vector<double> temperatures;          // per entropy slot
    std::vector<std::vector<double>> friction; // [eta][pair]
    std::vector<double> external;              // [pair]
    std::vector<double> matter_flux;           // signed sums J_k per compartment
    linalg::Matrix heat_flux;                  // complete P x P matrix, zero column sums

    // open systems
    std::vector<double> port_flow, port_mu, port_temperature, port_molar_entropy,
        port_entropy_flow;
    std::vector<double> source_entropy_flow, source_temperature;
    double port_flow_total = 0.0;
    double port_entropy_flow_total = 0.0; // sum_a flow_a * s_a + sum_b source_b
    double external_power = 0.0;          // sum_a (flow mu + flow s T) + sum_b source T
};

namespace detail {

std::vector<Covector> assemble_etas(const ChartSpec& chart, const StateIngredients& in);
Covector assemble_rhs(const ChartSpec& chart, const StateIngredients& in,
                      const std::vector<Covector>& etas);
std::vector<double> entropy_identity_residuals(const ChartSpec& chart,
                                               const StateIngredients& in,
                                               std::span<const double> xdot);

} // namespace detail

/// One of the four system classes, bundled with its chart, two-form,
/// Hamiltonian, forces and fluxes. Immutable after construction; all
/// per-state evaluations are pure.
class SystemInstance {
public:
    /// Validates counts, flux structure and variable-dependence
    /// restrictions (the Hamiltonian and internal forces/fluxes must not
    /// reference the displacement coordinates W, Gamma, Sigma; port and
    /// source laws may reference the full state).
    static SystemInstance make(ChartSpec chart, std::shared_ptr<const ScalarField> hamiltonian,
                               ForceSpec forces, FluxSpec fluxes, ParameterSet params = {});

    const ChartSpec& chart() const { return chart_; }
    const TwoFormMatrix& two_form() const { return omega_; }
    const ScalarField& hamiltonian() const { return *hamiltonian_; }
    const ForceSpec& forces() const { return forces_; }
    const FluxSpec& fluxes() const { return fluxes_; }
    bool has_external_force() const { return !forces_.external.empty(); }

    /// All state-dependent scalars in one sweep.
    StateIngredients ingredients(std::span<const double> state) const;

    /// The class's eta covectors at the state (one, or P for NonSimple).
    std::vector<Covector> build_etas(std::span<const double> state) const;

    /// dH + sum_k eta_k - F_ext, with the open-system eta coefficient of
    /// (1 - external power) folded in.
    Covector assemble_rhs(std::span<const double> state) const;

    /// Solves the flat system for the evolution vector field. Throws
    /// TemperatureDegenerate when a dH/dS_k vanishes exactly and
    /// DegenerateStructure when the flat operator condition blows up.
    std::vector<double> evolution_field(std::span<const double> state) const;

    /// The closed-form right-hand side of the class's evolution equations,
    /// implemented directly and independently of the linear solver.
    std::vector<double> explicit_rhs_oracle(std::span<const double> state) const;

    /// Per-eta residual of the class's entropy identity at (state, xdot).
    std::vector<double> entropy_identity_residuals(std::span<const double> state,
                                                   std::span<const double> xdot) const;

    /// Named per-state diagnostics evaluated from the analytic field.
    std::map<std::string, double> diagnostics(std::span<const double> state,
                                              std::span<const double> xdot) const;

private:
    SystemInstance(ChartSpec chart, std::shared_ptr<const ScalarField> hamiltonian,
                   ForceSpec forces, FluxSpec fluxes, ParameterSet params);

    void check_temperatures(const StateIngredients& in) const;
    std::vector<double> full_point(std::span<const double> state) const;

    ChartSpec chart_;
    std::shared_ptr<const ScalarField> hamiltonian_;
    ForceSpec forces_;
    FluxSpec fluxes_;
    ParameterSet params_;
    TwoFormMatrix omega_;
};

} // namespace cosym
