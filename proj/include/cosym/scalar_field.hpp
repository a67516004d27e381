#pragma once

#include "cosym/expr.hpp"

#include <memory>
#include <span>
#include <vector>

namespace cosym {

/// A differentiable scalar function of the chart state, evaluated with
/// exact first derivatives. Implementations must be pure and immutable so
/// instances can be shared across threads.
class ScalarField {
public:
    virtual ~ScalarField() = default;

    virtual std::size_t dimension() const = 0;
    virtual double value(std::span<const double> state) const = 0;

    /// gradient has exactly dimension() entries (chart coordinates only)
    virtual expr::EvalGrad value_and_gradient(std::span<const double> state) const = 0;
};

/// Scalar field backed by a parsed expression whose vocabulary is the chart
/// coordinates followed by a fixed table of named parameters.
class ExprScalarField final : public ScalarField {
public:
    ExprScalarField(expr::Ast ast, std::size_t state_dimension,
                    std::vector<double> parameter_values);

    std::size_t dimension() const override { return dim_; }
    double value(std::span<const double> state) const override;
    expr::EvalGrad value_and_gradient(std::span<const double> state) const override;

    const expr::Ast& ast() const { return ast_; }

private:
    std::vector<double> full_point(std::span<const double> state) const;

    expr::Ast ast_;
    std::size_t dim_;
    std::vector<double> params_;
};

} // namespace cosym
