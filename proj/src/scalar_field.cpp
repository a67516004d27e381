#include "cosym/scalar_field.hpp"

#include "cosym/errors.hpp"

namespace cosym {

ExprScalarField::ExprScalarField(expr::Ast ast, std::size_t state_dimension,
                                 std::vector<double> parameter_values)
    : ast_(std::move(ast)), dim_(state_dimension), params_(std::move(parameter_values)) {
    if (ast_.vocabulary().size() != dim_ + params_.size())
        throw Error("expression vocabulary does not match chart plus parameter table");
}

std::vector<double> ExprScalarField::full_point(std::span<const double> state) const {
    if (state.size() != dim_) throw Error("state has wrong dimension");
    std::vector<double> point(state.begin(), state.end());
    point.insert(point.end(), params_.begin(), params_.end());
    return point;
}

double ExprScalarField::value(std::span<const double> state) const {
    return expr::eval(ast_, full_point(state));
}

expr::EvalGrad ExprScalarField::value_and_gradient(std::span<const double> state) const {
    expr::EvalGrad eg = expr::eval_with_grad(ast_, full_point(state));
    eg.gradient.resize(dim_); // parameter slots are fixed, not state
    return eg;
}

} // namespace cosym
