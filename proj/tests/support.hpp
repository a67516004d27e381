#pragma once

#include "cosym/dynamics.hpp"
#include "cosym/errors.hpp"
#include "cosym/expr.hpp"
#include "cosym/legendre.hpp"
#include "cosym/systems.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace cosym::testing {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// random expression trees (for round-trip and derivative-oracle properties)

inline expr::NodePtr random_node(Rng& rng, const std::vector<std::string>& vocab, int depth) {
    using expr::Node;
    auto leaf = [&]() {
        auto n = std::make_shared<Node>();
        if (rng.pick(3) == 0) {
            n->kind = Node::Kind::Constant;
            double c = rng.uniform(-3.0, 3.0);
            n->constant = std::round(c * 16.0) / 16.0; // representable, prints short
        } else {
            n->kind = Node::Kind::Variable;
            n->var = rng.pick(static_cast<int>(vocab.size()));
            n->var_name = vocab[static_cast<std::size_t>(n->var)];
        }
        return n;
    };
    if (depth <= 0 || rng.pick(4) == 0) return leaf();

    if (rng.pick(3) == 0) {
        auto n = std::make_shared<Node>();
        n->kind = Node::Kind::Unary;
        static const expr::UnaryOp ops[] = {expr::UnaryOp::Neg,  expr::UnaryOp::Exp,
                                            expr::UnaryOp::Sin,  expr::UnaryOp::Cos,
                                            expr::UnaryOp::Tanh, expr::UnaryOp::Log,
                                            expr::UnaryOp::Sqrt};
        n->uop = ops[rng.pick(7)];
        n->lhs = random_node(rng, vocab, depth - 1);
        // keep the folded-literal normal form the parser produces
        if (n->uop == expr::UnaryOp::Neg && n->lhs->kind == Node::Kind::Constant) {
            auto folded = std::make_shared<Node>();
            folded->kind = Node::Kind::Constant;
            folded->constant = -n->lhs->constant;
            return folded;
        }
        return n;
    }
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    static const expr::BinaryOp ops[] = {expr::BinaryOp::Add, expr::BinaryOp::Sub,
                                         expr::BinaryOp::Mul, expr::BinaryOp::Div,
                                         expr::BinaryOp::Pow};
    n->bop = ops[rng.pick(5)];
    n->lhs = random_node(rng, vocab, depth - 1);
    if (n->bop == expr::BinaryOp::Pow) {
        // keep powers tame: small integer constant exponents
        auto e = std::make_shared<Node>();
        e->kind = Node::Kind::Constant;
        e->constant = static_cast<double>(1 + rng.pick(3));
        n->rhs = e;
    } else {
        n->rhs = random_node(rng, vocab, depth - 1);
    }
    return n;
}

inline expr::Ast random_ast(Rng& rng, std::vector<std::string> vocab, int depth = 6) {
    auto shared = std::make_shared<const std::vector<std::string>>(std::move(vocab));
    return expr::Ast(random_node(rng, *shared, depth), shared);
}

// ---------------------------------------------------------------------------
// dense rank oracle (full pivoting), independent of the LU solver

inline std::size_t rank_oracle(linalg::Matrix m, double tol = 1e-10) {
    const std::size_t rows = m.rows(), cols = m.cols();
    std::size_t rank = 0;
    std::vector<bool> used_row(rows, false);
    for (std::size_t step = 0; step < std::min(rows, cols); ++step) {
        std::size_t pr = 0, pc = 0;
        double best = 0.0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (used_row[r]) continue;
            for (std::size_t c = 0; c < cols; ++c)
                if (std::abs(m(r, c)) > best) {
                    best = std::abs(m(r, c));
                    pr = r;
                    pc = c;
                }
        }
        if (best <= tol) break;
        ++rank;
        used_row[pr] = true;
        for (std::size_t r = 0; r < rows; ++r) {
            if (used_row[r] || m(r, pc) == 0.0) continue;
            const double f = m(r, pc) / m(pr, pc);
            for (std::size_t c = 0; c < cols; ++c) m(r, c) -= f * m(pr, c);
        }
    }
    return rank;
}

// ---------------------------------------------------------------------------
// reference systems, one per class

struct TestSystem {
    SystemInstance sys;
    std::function<std::vector<double>(Rng&)> sample; // nondegenerate random states
};

inline expr::Ast parse_in(const ChartSpec& chart, const ParameterSet& params,
                          const std::string& src) {
    return expr::parse(src, params.vocabulary(chart));
}

inline TestSystem make_simple_system(bool with_external = false) {
    ChartSpec chart = ChartSpec::make(SystemClass::SimpleClosed, 1);
    ParameterSet params{{"T0", "lam", "fe"}, {1.0, 0.1, with_external ? 0.3 : 0.0}};
    auto h = std::make_shared<ExprScalarField>(
        parse_in(chart, params, "p^2/2 + q^2/2 + T0*exp(0.5*S)"), chart.dimension(),
        params.values);
    ForceSpec forces;
    forces.friction = {{parse_in(chart, params, "-lam*p - 0.05*q^2*p")}};
    if (with_external) forces.external = {parse_in(chart, params, "fe*sin(q)")};
    SystemInstance sys = SystemInstance::make(chart, h, forces, FluxSpec{}, params);
    return {std::move(sys), [](Rng& rng) {
                return std::vector<double>{rng.uniform(-2, 2), rng.uniform(-2, 2),
                                           rng.uniform(-1, 1)};
            }};
}

inline TestSystem make_mass_system() {
    ChartSpec chart = ChartSpec::make(SystemClass::MassTransfer, 1, 2);
    ParameterSet params{{"T0", "lam", "b1", "b2", "km"}, {1.0, 0.1, 0.8, 1.1, 0.25}};
    auto h = std::make_shared<ExprScalarField>(
        parse_in(chart, params,
                 "p^2/2 + q^2/2 + T0*exp(0.5*S) + 0.5*b1*N1^2 + 0.5*b2*N2^2"),
        chart.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{parse_in(chart, params, "-lam*p")}};
    FluxSpec fluxes;
    fluxes.matter.push_back({0, 1, parse_in(chart, params, "km*(b1*N1 - b2*N2)")});
    SystemInstance sys = SystemInstance::make(chart, h, forces, fluxes, params);
    return {std::move(sys), [](Rng& rng) {
                // q, p, W1, W2, N1, N2, S
                return std::vector<double>{rng.uniform(-2, 2), rng.uniform(-2, 2),
                                           rng.uniform(-1, 1), rng.uniform(-1, 1),
                                           rng.uniform(0.5, 2), rng.uniform(0.5, 2),
                                           rng.uniform(-1, 1)};
            }};
}

inline TestSystem make_nonsimple_system() {
    ChartSpec chart = ChartSpec::make(SystemClass::NonSimple, 1, 0, 2);
    ParameterSet params{{"a1", "a2", "b1", "b2", "lam1", "lam2", "km", "kap"},
                        {1.0, 1.3, 0.8, 1.1, 0.1, 0.15, 0.2, 0.3}};
    auto h = std::make_shared<ExprScalarField>(
        parse_in(chart, params,
                 "p^2/2 + q^2/2 + 0.5*a1*S1^2 + 0.5*a2*S2^2 + 0.5*b1*N1^2 + 0.5*b2*N2^2"),
        chart.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{parse_in(chart, params, "-lam1*p")},
                       {parse_in(chart, params, "-lam2*p")}};
    FluxSpec fluxes;
    // matter flows toward the lower chemical potential per temperature
    fluxes.matter.push_back(
        {0, 1, parse_in(chart, params, "km*(b1*N1/(a1*S1) - b2*N2/(a2*S2))")});
    // symmetric conduction coefficients (zero row and column sums)
    fluxes.heat.push_back({0, 1, parse_in(chart, params, "-kap*(1 + 0.1*(S1-S2)^2)")});
    fluxes.heat.push_back({1, 0, parse_in(chart, params, "-kap*(1 + 0.1*(S1-S2)^2)")});
    SystemInstance sys = SystemInstance::make(chart, h, forces, fluxes, params);
    return {std::move(sys), [](Rng& rng) {
                // q, p, W1, W2, N1, N2, Gamma1, Gamma2, S1, S2, Sigma1, Sigma2
                return std::vector<double>{rng.uniform(-2, 2),   rng.uniform(-2, 2),
                                           rng.uniform(-1, 1),   rng.uniform(-1, 1),
                                           rng.uniform(0.5, 2),  rng.uniform(0.5, 2),
                                           rng.uniform(-1, 1),   rng.uniform(-1, 1),
                                           rng.uniform(0.6, 1.6), rng.uniform(0.6, 1.6),
                                           rng.uniform(-1, 1),   rng.uniform(-1, 1)};
            }};
}

inline TestSystem make_open_system(bool live_ports = true) {
    ChartSpec chart = ChartSpec::make(SystemClass::OpenSimple, 1, 0, 0, live_ports ? 2 : 0,
                                      live_ports ? 1 : 0);
    ParameterSet params{{"T0", "lam", "b1", "j1", "j2", "nbar", "Tp1", "Tp2", "s1", "s2",
                         "js", "Tb"},
                        {1.0, 0.1, 0.9, 0.2, 0.15, 1.5, 1.2, 0.9, 0.4, 0.6, 0.1, 1.4}};
    auto h = std::make_shared<ExprScalarField>(
        parse_in(chart, params, "p^2/2 + q^2/2 + T0*exp(0.5*S) + 0.5*b1*N^2"),
        chart.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{parse_in(chart, params, "-lam*p")}};
    FluxSpec fluxes;
    if (live_ports) {
        fluxes.ports.push_back({parse_in(chart, params, "j1*(nbar - N)"),
                                parse_in(chart, params, "b1*N"),
                                parse_in(chart, params, "Tp1"),
                                parse_in(chart, params, "s1")});
        fluxes.ports.push_back({parse_in(chart, params, "j2*cos(q)"),
                                parse_in(chart, params, "b1*N + 0.1"),
                                parse_in(chart, params, "Tp2"),
                                parse_in(chart, params, "s2")});
        fluxes.sources.push_back(
            {parse_in(chart, params, "js*sin(Gamma)"), parse_in(chart, params, "Tb")});
    }
    SystemInstance sys = SystemInstance::make(chart, h, forces, fluxes, params);
    return {std::move(sys), [](Rng& rng) {
                // q, p, W, N, Gamma, S, Sigma
                return std::vector<double>{rng.uniform(-2, 2), rng.uniform(-2, 2),
                                           rng.uniform(-1, 1), rng.uniform(0.5, 2),
                                           rng.uniform(-1, 1), rng.uniform(-1, 1),
                                           rng.uniform(-1, 1)};
            }};
}

inline std::vector<TestSystem> all_class_systems() {
    std::vector<TestSystem> out;
    out.push_back(make_simple_system(true));
    out.push_back(make_mass_system());
    out.push_back(make_nonsimple_system());
    out.push_back(make_open_system());
    return out;
}

// ---------------------------------------------------------------------------
// reference Lagrangians (hyperregular on the sampled domain)

struct TestLagrangian {
    LagrangianSystem sys;
    std::function<std::vector<double>(Rng&)> sample; // velocity-side states
};

inline TestLagrangian make_quadratic_lagrangian() {
    ChartSpec momentum = ChartSpec::make(SystemClass::SimpleClosed, 1);
    ChartSpec velocity = momentum.velocity_variant();
    ParameterSet params{{"T0", "lam"}, {1.0, 0.1}};
    auto lag = std::make_shared<ExprScalarField>(
        expr::parse("qdot^2/2 - q^2/2 - T0*S", params.vocabulary(velocity)),
        velocity.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{expr::parse("-lam*p", params.vocabulary(momentum))}};
    LagrangianSystem sys =
        LagrangianSystem::make(momentum, lag, forces, FluxSpec{}, params);
    return {std::move(sys), [](Rng& rng) {
                return std::vector<double>{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                                           rng.uniform(-1, 1)};
            }};
}

inline TestLagrangian make_cosh_lagrangian() {
    ChartSpec momentum = ChartSpec::make(SystemClass::SimpleClosed, 1);
    ChartSpec velocity = momentum.velocity_variant();
    ParameterSet params{{"T0", "lam"}, {1.0, 0.08}};
    // cosh kinetic energy written with exponentials
    auto lag = std::make_shared<ExprScalarField>(
        expr::parse("(exp(qdot) + exp(-qdot))/2 - q^2/2 - T0*S",
                    params.vocabulary(velocity)),
        velocity.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{expr::parse("-lam*p", params.vocabulary(momentum))}};
    LagrangianSystem sys =
        LagrangianSystem::make(momentum, lag, forces, FluxSpec{}, params);
    return {std::move(sys), [](Rng& rng) {
                return std::vector<double>{rng.uniform(-1.5, 1.5), rng.uniform(-2.0, 2.0),
                                           rng.uniform(-1, 1)};
            }};
}

inline TestLagrangian make_varmass_lagrangian() {
    ChartSpec momentum = ChartSpec::make(SystemClass::SimpleClosed, 1);
    ChartSpec velocity = momentum.velocity_variant();
    ParameterSet params{{"T0", "lam"}, {1.0, 0.05}};
    // position-dependent mass m(q) = 1 + 0.5 tanh(q)^2
    auto lag = std::make_shared<ExprScalarField>(
        expr::parse("(1 + 0.5*tanh(q)^2)*qdot^2/2 - q^2/2 - T0*S",
                    params.vocabulary(velocity)),
        velocity.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{expr::parse("-lam*p", params.vocabulary(momentum))}};
    LagrangianSystem sys =
        LagrangianSystem::make(momentum, lag, forces, FluxSpec{}, params);
    return {std::move(sys), [](Rng& rng) {
                return std::vector<double>{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                                           rng.uniform(-1, 1)};
            }};
}

inline TestLagrangian make_mass_lagrangian() {
    ChartSpec momentum = ChartSpec::make(SystemClass::MassTransfer, 1, 2);
    ChartSpec velocity = momentum.velocity_variant();
    ParameterSet params{{"T0", "lam", "b1", "b2", "km"}, {1.0, 0.1, 0.8, 1.1, 0.2}};
    auto lag = std::make_shared<ExprScalarField>(
        expr::parse("qdot^2/2 - q^2/2 - T0*S - 0.5*b1*N1^2 - 0.5*b2*N2^2",
                    params.vocabulary(velocity)),
        velocity.dimension(), params.values);
    ForceSpec forces;
    forces.friction = {{expr::parse("-lam*p", params.vocabulary(momentum))}};
    FluxSpec fluxes;
    fluxes.matter.push_back(
        {0, 1, expr::parse("km*(b1*N1 - b2*N2)", params.vocabulary(momentum))});
    LagrangianSystem sys = LagrangianSystem::make(momentum, lag, forces, fluxes, params);
    return {std::move(sys), [](Rng& rng) {
                // q, qdot, W1, W2, N1, N2, S
                return std::vector<double>{rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5),
                                           rng.uniform(-1, 1),     rng.uniform(-1, 1),
                                           rng.uniform(0.5, 2),    rng.uniform(0.5, 2),
                                           rng.uniform(-1, 1)};
            }};
}

inline std::vector<TestLagrangian> hyperregular_lagrangians() {
    std::vector<TestLagrangian> out;
    out.push_back(make_quadratic_lagrangian());
    out.push_back(make_cosh_lagrangian());
    out.push_back(make_varmass_lagrangian());
    return out;
}

} // namespace cosym::testing
