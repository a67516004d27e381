#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cosym::expr {

enum class UnaryOp { Neg, Exp, Log, Sin, Cos, Sqrt, Tanh };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
    enum class Kind { Constant, Variable, Unary, Binary };

    Kind kind = Kind::Constant;
    double constant = 0.0;
    int var = -1; // slot in the vocabulary
    std::string var_name;
    UnaryOp uop = UnaryOp::Neg;
    BinaryOp bop = BinaryOp::Add;
    NodePtr lhs, rhs; // Unary uses lhs only
};

/// Immutable expression tree bound to a declared vocabulary. Derivative
/// seeds are allocated per declared variable, so gradients of expressions
/// sharing a chart line up slot for slot.
class Ast {
public:
    Ast() = default;

    bool valid() const { return root_ != nullptr; }
    const Node* root() const { return root_.get(); }
    const std::vector<std::string>& vocabulary() const;

    bool references(std::string_view name) const;
    std::vector<std::string> referenced_variables() const; // sorted, unique

    friend bool operator==(const Ast& a, const Ast& b);
    friend bool operator!=(const Ast& a, const Ast& b) { return !(a == b); }

    // used by the parser and by test generators
    Ast(NodePtr root, std::shared_ptr<const std::vector<std::string>> vocab)
        : root_(std::move(root)), vocab_(std::move(vocab)) {}

private:
    NodePtr root_;
    std::shared_ptr<const std::vector<std::string>> vocab_;
};

/// Parses src against the vocabulary. Precedence: ^ binds tightest and is
/// right-associative, then unary minus, then * /, then + -. Throws
/// SyntaxError or UnknownVariable.
Ast parse(std::string_view src, std::vector<std::string> vocabulary);

/// Prints with the minimal parentheses needed so that parse(print(a)) == a.
std::string print(const Ast& ast);
std::string print_node(const Node& node);

/// Plain value at a point laid out in vocabulary order.
double eval(const Ast& ast, std::span<const double> point);

struct EvalGrad {
    double value = 0.0;
    std::vector<double> gradient; // one slot per declared variable
};

/// Value and exact first derivatives (dual-number propagation). Gradient
/// entries of variables the tree never touches are zero.
EvalGrad eval_with_grad(const Ast& ast, std::span<const double> point);

// Name-keyed conveniences (all declared variables must be present).
double eval(const Ast& ast, const std::map<std::string, double>& point);
std::pair<double, std::map<std::string, double>> eval_with_grad(
    const Ast& ast, const std::map<std::string, double>& point);

} // namespace cosym::expr
