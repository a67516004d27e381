#include "cosym/expr.hpp"

#include "cosym/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <set>

namespace cosym::expr {

namespace {

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// tokenizer

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind = Tok::End;
    std::size_t offset = 0;
    std::string text;
    double number = 0.0;
};

bool is_ident_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < src_.size() && (src_[pos_] == ' ' || src_[pos_] == '\t' ||
                                      src_[pos_] == '\r' || src_[pos_] == '\n'))
            ++pos_;
        tok_ = Token{};
        tok_.offset = pos_;
        if (pos_ >= src_.size()) {
            tok_.kind = Tok::End;
            tok_.text = "end of input";
            return;
        }
        const char c = src_[pos_];
        switch (c) {
        case '+': single(Tok::Plus, "+"); return;
        case '-': single(Tok::Minus, "-"); return;
        case '*': single(Tok::Star, "*"); return;
        case '/': single(Tok::Slash, "/"); return;
        case '^': single(Tok::Caret, "^"); return;
        case '(': single(Tok::LParen, "("); return;
        case ')': single(Tok::RParen, ")"); return;
        default: break;
        }
        if (is_digit(c) || (c == '.' && pos_ + 1 < src_.size() && is_digit(src_[pos_ + 1]))) {
            lex_number();
            return;
        }
        if (is_ident_start(c)) {
            std::size_t end = pos_;
            while (end < src_.size() && is_ident_char(src_[end])) ++end;
            tok_.kind = Tok::Ident;
            tok_.text = std::string(src_.substr(pos_, end - pos_));
            pos_ = end;
            return;
        }
        throw SyntaxError(pos_, "'" + std::string(1, c) + "'", {"an expression"});
    }

    void single(Tok k, const char* text) {
        tok_.kind = k;
        tok_.text = text;
        ++pos_;
    }

    void lex_number() {
        const std::size_t start = pos_;
        while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        if (pos_ < src_.size() && src_[pos_] == '.') {
            ++pos_;
            while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
        }
        if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
            std::size_t exp = pos_ + 1;
            if (exp < src_.size() && (src_[exp] == '+' || src_[exp] == '-')) ++exp;
            if (exp < src_.size() && is_digit(src_[exp])) {
                pos_ = exp;
                while (pos_ < src_.size() && is_digit(src_[pos_])) ++pos_;
            }
        }
        tok_.kind = Tok::Number;
        tok_.text = std::string(src_.substr(start, pos_ - start));
        tok_.number = std::strtod(tok_.text.c_str(), nullptr);
    }

    std::string_view src_;
    std::size_t pos_ = 0;
    Token tok_;
};

// ---------------------------------------------------------------------------
// Pratt parser

constexpr int kBpAdd = 10;
constexpr int kBpMul = 20;
constexpr int kBpNeg = 25;
constexpr int kBpPow = 30;

struct FunctionEntry {
    const char* name;
    UnaryOp op;
};

constexpr FunctionEntry kFunctions[] = {
    {"exp", UnaryOp::Exp}, {"log", UnaryOp::Log},   {"sin", UnaryOp::Sin},
    {"cos", UnaryOp::Cos}, {"sqrt", UnaryOp::Sqrt}, {"tanh", UnaryOp::Tanh},
};

const FunctionEntry* find_function(const std::string& name) {
    for (const auto& f : kFunctions)
        if (name == f.name) return &f;
    return nullptr;
}

NodePtr make_constant(double v) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Constant;
    n->constant = v;
    return n;
}

NodePtr make_unary(UnaryOp op, NodePtr child) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Unary;
    n->uop = op;
    n->lhs = std::move(child);
    return n;
}

NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs) {
    auto n = std::make_shared<Node>();
    n->kind = Node::Kind::Binary;
    n->bop = op;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

class Parser {
public:
    Parser(std::string_view src, const std::vector<std::string>& vocab)
        : lexer_(src), vocab_(vocab) {}

    NodePtr parse_all() {
        NodePtr e = parse_expr(0);
        const Token& t = lexer_.peek();
        if (t.kind != Tok::End)
            throw SyntaxError(t.offset, "'" + t.text + "'", {"an operator", "end of input"});
        return e;
    }

private:
    NodePtr parse_expr(int min_bp) {
        NodePtr lhs = parse_operand();
        for (;;) {
            const Token& t = lexer_.peek();
            BinaryOp op;
            int bp;
            switch (t.kind) {
            case Tok::Plus: op = BinaryOp::Add; bp = kBpAdd; break;
            case Tok::Minus: op = BinaryOp::Sub; bp = kBpAdd; break;
            case Tok::Star: op = BinaryOp::Mul; bp = kBpMul; break;
            case Tok::Slash: op = BinaryOp::Div; bp = kBpMul; break;
            case Tok::Caret: op = BinaryOp::Pow; bp = kBpPow; break;
            default: return lhs;
            }
            if (bp < min_bp) return lhs;
            lexer_.take();
            // ^ is right-associative, the others associate left
            NodePtr rhs = parse_expr(op == BinaryOp::Pow ? bp : bp + 1);
            lhs = make_binary(op, std::move(lhs), std::move(rhs));
        }
    }

    NodePtr parse_operand() {
        const Token t = lexer_.take();
        switch (t.kind) {
        case Tok::Number:
            return make_constant(t.number);
        case Tok::Minus: {
            NodePtr inner = parse_expr(kBpNeg);
            // fold literals so -3 round-trips as a constant (but -3^2 stays -(3^2))
            if (inner->kind == Node::Kind::Constant) return make_constant(-inner->constant);
            return make_unary(UnaryOp::Neg, std::move(inner));
        }
        case Tok::LParen: {
            NodePtr inner = parse_expr(0);
            expect(Tok::RParen, ")");
            return inner;
        }
        case Tok::Ident: {
            if (lexer_.peek().kind == Tok::LParen) {
                const FunctionEntry* fn = find_function(t.text);
                if (!fn)
                    throw SyntaxError(t.offset, "'" + t.text + "'",
                                      {"exp", "log", "sin", "cos", "sqrt", "tanh"});
                lexer_.take(); // (
                NodePtr arg = parse_expr(0);
                expect(Tok::RParen, ")");
                return make_unary(fn->op, std::move(arg));
            }
            const auto it = std::find(vocab_.begin(), vocab_.end(), t.text);
            if (it == vocab_.end()) throw UnknownVariable(t.text, t.offset);
            auto n = std::make_shared<Node>();
            n->kind = Node::Kind::Variable;
            n->var = static_cast<int>(it - vocab_.begin());
            n->var_name = t.text;
            return n;
        }
        default:
            throw SyntaxError(t.offset, "'" + t.text + "'", {"an expression"});
        }
    }

    void expect(Tok kind, const char* what) {
        const Token& t = lexer_.peek();
        if (t.kind != kind) throw SyntaxError(t.offset, "'" + t.text + "'", {what});
        lexer_.take();
    }

    Lexer lexer_;
    const std::vector<std::string>& vocab_;
};

// ---------------------------------------------------------------------------
// printing

// Effective precedence for parenthesization; atoms are tightest, negative
// constants print with a leading '-' and so behave like a negation.
int print_prec(const Node& n) {
    switch (n.kind) {
    case Node::Kind::Constant:
        return std::signbit(n.constant) ? kBpNeg : 100;
    case Node::Kind::Variable:
        return 100;
    case Node::Kind::Unary:
        return n.uop == UnaryOp::Neg ? kBpNeg : 100; // functions carry their own parens
    case Node::Kind::Binary:
        switch (n.bop) {
        case BinaryOp::Add:
        case BinaryOp::Sub: return kBpAdd;
        case BinaryOp::Mul:
        case BinaryOp::Div: return kBpMul;
        case BinaryOp::Pow: return kBpPow;
        }
    }
    return 100;
}

const char* function_name(UnaryOp op) {
    switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Exp: return "exp";
    case UnaryOp::Log: return "log";
    case UnaryOp::Sin: return "sin";
    case UnaryOp::Cos: return "cos";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Tanh: return "tanh";
    }
    return "?";
}

void print_rec(const Node& n, std::string& out) {
    const auto child = [&out](const Node& c, bool parens) {
        if (parens) out += '(';
        print_rec(c, out);
        if (parens) out += ')';
    };
    switch (n.kind) {
    case Node::Kind::Constant:
        out += format_number(n.constant);
        return;
    case Node::Kind::Variable:
        out += n.var_name;
        return;
    case Node::Kind::Unary:
        if (n.uop == UnaryOp::Neg) {
            out += '-';
            child(*n.lhs, print_prec(*n.lhs) < kBpNeg);
        } else {
            out += function_name(n.uop);
            out += '(';
            print_rec(*n.lhs, out);
            out += ')';
        }
        return;
    case Node::Kind::Binary: {
        const int prec = print_prec(n);
        const char* op = nullptr;
        switch (n.bop) {
        case BinaryOp::Add: op = " + "; break;
        case BinaryOp::Sub: op = " - "; break;
        case BinaryOp::Mul: op = "*"; break;
        case BinaryOp::Div: op = "/"; break;
        case BinaryOp::Pow: op = "^"; break;
        }
        if (n.bop == BinaryOp::Pow) {
            child(*n.lhs, print_prec(*n.lhs) <= prec);
            out += op;
            child(*n.rhs, print_prec(*n.rhs) < prec);
        } else {
            child(*n.lhs, print_prec(*n.lhs) < prec);
            out += op;
            child(*n.rhs, print_prec(*n.rhs) <= prec);
        }
        return;
    }
    }
}

// ---------------------------------------------------------------------------
// evaluation

[[noreturn]] void domain_fail(const char* what, const Node& n) {
    throw DomainError(what, print_node(n));
}

double eval_value(const Node& n, std::span<const double> point) {
    switch (n.kind) {
    case Node::Kind::Constant:
        return n.constant;
    case Node::Kind::Variable:
        return point[static_cast<std::size_t>(n.var)];
    case Node::Kind::Unary: {
        const double a = eval_value(*n.lhs, point);
        switch (n.uop) {
        case UnaryOp::Neg: return -a;
        case UnaryOp::Exp: return std::exp(a);
        case UnaryOp::Log:
            if (a <= 0.0) domain_fail("log of non-positive value", n);
            return std::log(a);
        case UnaryOp::Sin: return std::sin(a);
        case UnaryOp::Cos: return std::cos(a);
        case UnaryOp::Sqrt:
            if (a < 0.0) domain_fail("sqrt of negative value", n);
            return std::sqrt(a);
        case UnaryOp::Tanh: return std::tanh(a);
        }
        break;
    }
    case Node::Kind::Binary: {
        const double a = eval_value(*n.lhs, point);
        const double b = eval_value(*n.rhs, point);
        switch (n.bop) {
        case BinaryOp::Add: return a + b;
        case BinaryOp::Sub: return a - b;
        case BinaryOp::Mul: return a * b;
        case BinaryOp::Div:
            if (b == 0.0) domain_fail("division by zero", n);
            return a / b;
        case BinaryOp::Pow:
            if (a == 0.0 && b < 0.0) domain_fail("zero raised to a negative power", n);
            if (a < 0.0 && std::floor(b) != b) domain_fail("negative base with fractional exponent", n);
            return std::pow(a, b);
        }
        break;
    }
    }
    return 0.0;
}

struct Dual {
    double v = 0.0;
    std::vector<double> d;
};

Dual eval_dual(const Node& n, std::span<const double> point, std::size_t width) {
    switch (n.kind) {
    case Node::Kind::Constant:
        return {n.constant, std::vector<double>(width, 0.0)};
    case Node::Kind::Variable: {
        Dual out{point[static_cast<std::size_t>(n.var)], std::vector<double>(width, 0.0)};
        out.d[static_cast<std::size_t>(n.var)] = 1.0;
        return out;
    }
    case Node::Kind::Unary: {
        Dual a = eval_dual(*n.lhs, point, width);
        double v = 0.0, dv = 0.0;
        switch (n.uop) {
        case UnaryOp::Neg: v = -a.v; dv = -1.0; break;
        case UnaryOp::Exp: v = std::exp(a.v); dv = v; break;
        case UnaryOp::Log:
            if (a.v <= 0.0) domain_fail("log of non-positive value", n);
            v = std::log(a.v);
            dv = 1.0 / a.v;
            break;
        case UnaryOp::Sin: v = std::sin(a.v); dv = std::cos(a.v); break;
        case UnaryOp::Cos: v = std::cos(a.v); dv = -std::sin(a.v); break;
        case UnaryOp::Sqrt:
            if (a.v < 0.0) domain_fail("sqrt of negative value", n);
            v = std::sqrt(a.v);
            if (a.v == 0.0) {
                for (double g : a.d)
                    if (g != 0.0) domain_fail("sqrt derivative at zero", n);
                dv = 0.0;
            } else {
                dv = 0.5 / v;
            }
            break;
        case UnaryOp::Tanh: {
            v = std::tanh(a.v);
            dv = 1.0 - v * v;
            break;
        }
        }
        for (double& g : a.d) g *= dv;
        a.v = v;
        return a;
    }
    case Node::Kind::Binary: {
        Dual a = eval_dual(*n.lhs, point, width);
        switch (n.bop) {
        case BinaryOp::Add: {
            const Dual b = eval_dual(*n.rhs, point, width);
            a.v += b.v;
            for (std::size_t i = 0; i < width; ++i) a.d[i] += b.d[i];
            return a;
        }
        case BinaryOp::Sub: {
            const Dual b = eval_dual(*n.rhs, point, width);
            a.v -= b.v;
            for (std::size_t i = 0; i < width; ++i) a.d[i] -= b.d[i];
            return a;
        }
        case BinaryOp::Mul: {
            const Dual b = eval_dual(*n.rhs, point, width);
            for (std::size_t i = 0; i < width; ++i) a.d[i] = a.d[i] * b.v + a.v * b.d[i];
            a.v *= b.v;
            return a;
        }
        case BinaryOp::Div: {
            const Dual b = eval_dual(*n.rhs, point, width);
            if (b.v == 0.0) domain_fail("division by zero", n);
            const double inv = 1.0 / b.v;
            const double v = a.v * inv;
            for (std::size_t i = 0; i < width; ++i) a.d[i] = (a.d[i] - v * b.d[i]) * inv;
            a.v = v;
            return a;
        }
        case BinaryOp::Pow: {
            if (n.rhs->kind == Node::Kind::Constant) {
                const double c = n.rhs->constant;
                if (a.v == 0.0 && c < 0.0) domain_fail("zero raised to a negative power", n);
                if (a.v < 0.0 && std::floor(c) != c)
                    domain_fail("negative base with fractional exponent", n);
                const double v = std::pow(a.v, c);
                double dv = 0.0;
                if (c != 0.0) {
                    dv = c * std::pow(a.v, c - 1.0);
                    if (!std::isfinite(dv)) {
                        for (double g : a.d)
                            if (g != 0.0) domain_fail("power derivative diverges", n);
                        dv = 0.0;
                    }
                }
                for (double& g : a.d) g *= dv;
                a.v = v;
                return a;
            }
            const Dual b = eval_dual(*n.rhs, point, width);
            if (a.v <= 0.0) {
                if (a.v == 0.0 && b.v > 0.0) {
                    bool seeded = false;
                    for (std::size_t i = 0; i < width; ++i)
                        if (a.d[i] != 0.0 || b.d[i] != 0.0) seeded = true;
                    if (seeded) domain_fail("power derivative at zero base", n);
                    a.v = 0.0;
                    return a;
                }
                domain_fail(a.v == 0.0 ? "zero raised to a negative power"
                                       : "negative base with variable exponent",
                            n);
            }
            const double v = std::pow(a.v, b.v);
            const double da = b.v * std::pow(a.v, b.v - 1.0);
            const double db = v * std::log(a.v);
            for (std::size_t i = 0; i < width; ++i) a.d[i] = da * a.d[i] + db * b.d[i];
            a.v = v;
            return a;
        }
        }
        break;
    }
    }
    return {};
}

void collect_vars(const Node& n, std::set<std::string>& out) {
    switch (n.kind) {
    case Node::Kind::Variable: out.insert(n.var_name); return;
    case Node::Kind::Unary: collect_vars(*n.lhs, out); return;
    case Node::Kind::Binary:
        collect_vars(*n.lhs, out);
        collect_vars(*n.rhs, out);
        return;
    default: return;
    }
}

bool node_equal(const Node& a, const Node& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case Node::Kind::Constant: return a.constant == b.constant;
    case Node::Kind::Variable: return a.var == b.var && a.var_name == b.var_name;
    case Node::Kind::Unary: return a.uop == b.uop && node_equal(*a.lhs, *b.lhs);
    case Node::Kind::Binary:
        return a.bop == b.bop && node_equal(*a.lhs, *b.lhs) && node_equal(*a.rhs, *b.rhs);
    }
    return false;
}

const std::vector<std::string>& empty_vocabulary() {
    static const std::vector<std::string> empty;
    return empty;
}

} // namespace

const std::vector<std::string>& Ast::vocabulary() const {
    return vocab_ ? *vocab_ : empty_vocabulary();
}

bool Ast::references(std::string_view name) const {
    if (!root_) return false;
    std::set<std::string> vars;
    collect_vars(*root_, vars);
    return vars.count(std::string(name)) > 0;
}

std::vector<std::string> Ast::referenced_variables() const {
    std::set<std::string> vars;
    if (root_) collect_vars(*root_, vars);
    return {vars.begin(), vars.end()};
}

bool operator==(const Ast& a, const Ast& b) {
    if (!a.root_ || !b.root_) return a.root_ == b.root_;
    return node_equal(*a.root_, *b.root_);
}

Ast parse(std::string_view src, std::vector<std::string> vocabulary) {
    for (const auto& name : vocabulary)
        if (find_function(name))
            throw Error("vocabulary name '" + name + "' collides with a builtin function");
    auto vocab = std::make_shared<const std::vector<std::string>>(std::move(vocabulary));
    Parser parser(src, *vocab);
    return Ast(parser.parse_all(), std::move(vocab));
}

std::string print(const Ast& ast) {
    if (!ast.valid()) return {};
    return print_node(*ast.root());
}

std::string print_node(const Node& node) {
    std::string out;
    print_rec(node, out);
    return out;
}

double eval(const Ast& ast, std::span<const double> point) {
    if (point.size() != ast.vocabulary().size())
        throw Error("evaluation point has wrong dimension");
    return eval_value(*ast.root(), point);
}

EvalGrad eval_with_grad(const Ast& ast, std::span<const double> point) {
    const std::size_t width = ast.vocabulary().size();
    if (point.size() != width) throw Error("evaluation point has wrong dimension");
    Dual d = eval_dual(*ast.root(), point, width);
    return {d.v, std::move(d.d)};
}

double eval(const Ast& ast, const std::map<std::string, double>& point) {
    std::vector<double> flat;
    flat.reserve(ast.vocabulary().size());
    for (const auto& name : ast.vocabulary()) {
        const auto it = point.find(name);
        if (it == point.end()) throw Error("missing value for variable '" + name + "'");
        flat.push_back(it->second);
    }
    return eval(ast, flat);
}

std::pair<double, std::map<std::string, double>> eval_with_grad(
    const Ast& ast, const std::map<std::string, double>& point) {
    std::vector<double> flat;
    flat.reserve(ast.vocabulary().size());
    for (const auto& name : ast.vocabulary()) {
        const auto it = point.find(name);
        if (it == point.end()) throw Error("missing value for variable '" + name + "'");
        flat.push_back(it->second);
    }
    EvalGrad eg = eval_with_grad(ast, flat);
    std::map<std::string, double> grad;
    for (std::size_t i = 0; i < ast.vocabulary().size(); ++i)
        grad[ast.vocabulary()[i]] = eg.gradient[i];
    return {eg.value, std::move(grad)};
}

} // namespace cosym::expr
