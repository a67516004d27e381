#pragma once

#include "cosym/systems.hpp"

#include <map>
#include <memory>
#include <span>
#include <vector>

namespace cosym {

/// Hessian condition beyond which the fiber derivative is treated as
/// singular at the queried point.
inline constexpr double kHessianConditionLimit = 1e8;

/// Central finite-difference step for the Legendre Jacobian and Hessian.
inline constexpr double kJacobianStep = 1e-6;

inline constexpr int kNewtonMaxIterations = 50;
inline constexpr double kNewtonTolerance = 1e-12;

/// A Lagrangian over the velocity-side chart (q, qdot, thermal blocks).
struct LagrangianSpec {
    std::shared_ptr<const ScalarField> lagrangian;
    ChartSpec velocity_chart;
};

/// E_L = qdot^i dL/dqdot^i - L
double lagrangian_energy(const LagrangianSpec& lag, std::span<const double> vstate);

/// Fiber derivative (q, qdot, rest) -> (q, p = dL/dqdot, rest) and its
/// Newton inverse. Immutable and safe to share.
class LegendreMap {
public:
    explicit LegendreMap(LagrangianSpec spec);

    const LagrangianSpec& spec() const { return spec_; }
    const ChartSpec& velocity_chart() const { return spec_.velocity_chart; }
    const ChartSpec& momentum_chart() const { return momentum_chart_; }

    /// Throws SingularLegendre when the velocity Hessian condition exceeds
    /// kHessianConditionLimit at the point.
    std::vector<double> forward(std::span<const double> vstate) const;

    /// Newton solve for qdot given p, initialized at qdot = p with a
    /// backtracking line search. Throws SingularLegendre or NewtonDivergence.
    std::vector<double> inverse(std::span<const double> mstate) const;

    /// n x n velocity Hessian of L (central differences of the exact gradient)
    linalg::Matrix velocity_hessian(std::span<const double> vstate) const;

    /// full D x D Jacobian of forward() by central differences
    linalg::Matrix jacobian(std::span<const double> vstate) const;

    /// forward() without the regularity check; for callers that already
    /// verified the Hessian at this state
    std::vector<double> forward_unchecked(std::span<const double> vstate) const;

private:
    LagrangianSpec spec_;
    ChartSpec momentum_chart_;
};

/// H = E_L o Leg^{-1}, evaluated numerically. The gradient uses the fiber
/// envelope relations dH/dq = -dL/dq, dH/dp = qdot, dH/dthermal = -dL/dthermal,
/// so dH/dS = -dL/dS holds by construction.
class LegendreHamiltonian final : public ScalarField {
public:
    explicit LegendreHamiltonian(std::shared_ptr<const LegendreMap> map);

    std::size_t dimension() const override;
    double value(std::span<const double> state) const override;
    expr::EvalGrad value_and_gradient(std::span<const double> state) const override;

private:
    std::shared_ptr<const LegendreMap> map_;
};

/// Lagrangian-side picture of a system. Force, flux and port laws are
/// written in the momentum-side vocabulary and composed with the fiber
/// derivative; the pulled-back two-form is evaluated numerically through
/// the finite-difference Jacobian of the fiber derivative.
class LagrangianSystem {
public:
    static LagrangianSystem make(ChartSpec momentum_chart,
                                 std::shared_ptr<const ScalarField> lagrangian, ForceSpec forces,
                                 FluxSpec fluxes, ParameterSet params = {});

    const LegendreMap& legendre() const { return *map_; }
    std::shared_ptr<const LegendreMap> legendre_ptr() const { return map_; }
    const ChartSpec& velocity_chart() const { return map_->velocity_chart(); }
    const ChartSpec& momentum_chart() const { return map_->momentum_chart(); }

    double energy(std::span<const double> vstate) const;

    /// All state-dependent scalars at a velocity-side state; coefficients
    /// are evaluated at the mapped momentum-side point.
    StateIngredients ingredients(std::span<const double> vstate) const;

    std::vector<Covector> build_etas(std::span<const double> vstate) const;

    /// Evolution field on the velocity-side chart.
    std::vector<double> evolution_field(std::span<const double> vstate) const;

    /// Hamiltonian-side system with H = E_L o Leg^{-1} and the same laws.
    SystemInstance hamiltonian_system() const;

    std::map<std::string, double> diagnostics(std::span<const double> vstate,
                                              std::span<const double> xdot) const;

private:
    LagrangianSystem(std::shared_ptr<const LegendreMap> map, ForceSpec forces, FluxSpec fluxes,
                     ParameterSet params);

    StateIngredients ingredients_with_jacobian(std::span<const double> vstate,
                                               const linalg::Matrix& jac) const;

    std::shared_ptr<const LegendreMap> map_;
    ForceSpec forces_;
    FluxSpec fluxes_;
    ParameterSet params_;
    TwoFormMatrix momentum_omega_;
};

} // namespace cosym
