#include "jumpsde/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace jumpsde {

enum class Op { Num, Var, Norm, T, R, Neg, Add, Sub, Mul, Div, Pow, Call };
enum class Fn { Sin, Cos, Exp, Log, Abs, Sign, Sqrt, Spow, Min, Max };

struct Expr::Node {
    Op op = Op::Num;
    double value = 0.0;
    int index = 0;   // Var: 0-based coordinate
    Fn fn = Fn::Sin;
    std::vector<std::shared_ptr<const Node>> kids;
};

namespace {

using NodeP = std::shared_ptr<const Expr::Node>;

struct FnInfo {
    const char* name;
    Fn fn;
    int arity;
};
constexpr FnInfo kFns[] = {{"sin", Fn::Sin, 1},   {"cos", Fn::Cos, 1},   {"exp", Fn::Exp, 1},
                           {"log", Fn::Log, 1},   {"abs", Fn::Abs, 1},   {"sign", Fn::Sign, 1},
                           {"sqrt", Fn::Sqrt, 1}, {"spow", Fn::Spow, 2}, {"min", Fn::Min, 2},
                           {"max", Fn::Max, 2}};

const char* fn_name(Fn f) {
    for (const auto& i : kFns) {
        if (i.fn == f) return i.name;
    }
    return "?";
}

NodeP make(Op op, std::vector<NodeP> kids = {}) {
    auto n = std::make_shared<Expr::Node>();
    n->op = op;
    n->kids = std::move(kids);
    return n;
}

class Parser {
public:
    Parser(const std::string& s, const ExprSymbols& sym) : s_(s), sym_(sym) {}

    NodeP parse() {
        NodeP e = sum();
        skip();
        if (p_ != s_.size()) throw SyntaxError("unexpected '" + std::string(1, s_[p_]) + "' at column " + col(), p_);
        return e;
    }

private:
    const std::string& s_;
    ExprSymbols sym_;
    std::size_t p_ = 0;

    std::string col() const { return std::to_string(p_ + 1); }
    void skip() {
        while (p_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[p_]))) ++p_;
    }
    bool eat(char c) {
        skip();
        if (p_ < s_.size() && s_[p_] == c) {
            ++p_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!eat(c)) {
            throw SyntaxError(std::string("expected '") + c + "' at column " + col(), p_);
        }
    }

    NodeP sum() {
        NodeP a = product();
        while (true) {
            if (eat('+')) {
                a = make(Op::Add, {a, product()});
            } else if (eat('-')) {
                a = make(Op::Sub, {a, product()});
            } else {
                return a;
            }
        }
    }
    NodeP product() {
        NodeP a = unary();
        while (true) {
            if (eat('*')) {
                a = make(Op::Mul, {a, unary()});
            } else if (eat('/')) {
                a = make(Op::Div, {a, unary()});
            } else {
                return a;
            }
        }
    }
    NodeP unary() {
        if (eat('-')) return make(Op::Neg, {unary()});
        if (eat('+')) return unary();
        return power();
    }
    NodeP power() {
        NodeP base = primary();
        if (eat('^')) return make(Op::Pow, {base, unary()});
        return base;
    }
    NodeP primary() {
        skip();
        if (p_ >= s_.size()) throw SyntaxError("unexpected end of expression", p_);
        const char c = s_[p_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (c == '(') {
            ++p_;
            NodeP e = sum();
            expect(')');
            return e;
        }
        if (c == '|') {
            const std::size_t at = p_;
            ++p_;
            skip();
            if (p_ < s_.size() && s_[p_] == 'x') {
                ++p_;
                skip();
                if (p_ < s_.size() && s_[p_] == '|') {
                    ++p_;
                    return make(Op::Norm);
                }
            }
            throw SyntaxError("only |x| may appear between bars (column " + std::to_string(at + 1) + ")", at);
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
        throw SyntaxError("unexpected '" + std::string(1, c) + "' at column " + col(), p_);
    }
    NodeP number() {
        const char* begin = s_.c_str() + p_;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) throw SyntaxError("malformed number at column " + col(), p_);
        p_ += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Expr::Node>();
        n->op = Op::Num;
        n->value = v;
        return n;
    }
    NodeP identifier() {
        const std::size_t at = p_;
        while (p_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[p_])) || s_[p_] == '_')) ++p_;
        const std::string id = s_.substr(at, p_ - at);
        skip();
        const bool call = p_ < s_.size() && s_[p_] == '(';
        if (call) {
            for (const auto& f : kFns) {
                if (id != f.name) continue;
                ++p_;
                std::vector<NodeP> args{sum()};
                while (eat(',')) args.push_back(sum());
                expect(')');
                if (static_cast<int>(args.size()) != f.arity) {
                    throw SyntaxError(id + " takes " + std::to_string(f.arity) + " argument(s) (column " +
                                          std::to_string(at + 1) + ")",
                                      at);
                }
                auto n = std::make_shared<Expr::Node>();
                n->op = Op::Call;
                n->fn = f.fn;
                n->kids = std::move(args);
                return n;
            }
            throw UnknownSymbol("unknown function '" + id + "' at column " + std::to_string(at + 1), at);
        }
        if (id == "pi") {
            auto n = std::make_shared<Expr::Node>();
            n->value = M_PI;
            return n;
        }
        if (id == "norm") return make(Op::Norm);
        if (id == "t" && sym_.t) return make(Op::T);
        if (id == "r" && sym_.r) return make(Op::R);
        if (id.size() > 1 && id[0] == 'x' &&
            id.find_first_not_of("0123456789", 1) == std::string::npos) {
            const long i = std::strtol(id.c_str() + 1, nullptr, 10);
            if (i < 1 || id[1] == '0') throw UnknownSymbol("'" + id + "' is not a coordinate (column " +
                                                               std::to_string(at + 1) + ")",
                                                           at);
            if (i > sym_.d) {
                throw DimensionMismatch("'" + id + "' exceeds the dimension d = " + std::to_string(sym_.d) +
                                            " (column " + std::to_string(at + 1) + ")",
                                        at);
            }
            auto n = std::make_shared<Expr::Node>();
            n->op = Op::Var;
            n->index = static_cast<int>(i - 1);
            return n;
        }
        throw UnknownSymbol("unknown symbol '" + id + "' at column " + std::to_string(at + 1), at);
    }
};

int precedence(const Expr::Node& n) {
    switch (n.op) {
        case Op::Add:
        case Op::Sub: return 1;
        case Op::Mul:
        case Op::Div: return 2;
        case Op::Neg: return 3;
        case Op::Pow: return 4;
        case Op::Num: return n.value < 0 ? 3 : 5;
        default: return 5;
    }
}

std::string print(const Expr::Node& n);

std::string wrap(const Expr::Node& n, bool paren) { return paren ? "(" + print(n) + ")" : print(n); }

std::string print(const Expr::Node& n) {
    const int p = precedence(n);
    switch (n.op) {
        case Op::Num: return n.value == M_PI ? "pi" : format_number(n.value);
        case Op::Var: return "x" + std::to_string(n.index + 1);
        case Op::Norm: return "|x|";
        case Op::T: return "t";
        case Op::R: return "r";
        case Op::Neg: return "-" + wrap(*n.kids[0], precedence(*n.kids[0]) < p);
        case Op::Add:
        case Op::Sub:
        case Op::Mul:
        case Op::Div: {
            const char* sym = n.op == Op::Add ? " + " : n.op == Op::Sub ? " - " : n.op == Op::Mul ? "*" : "/";
            // left-associative: the right operand needs parentheses at equal precedence
            return wrap(*n.kids[0], precedence(*n.kids[0]) < p) + sym + wrap(*n.kids[1], precedence(*n.kids[1]) <= p);
        }
        case Op::Pow:
            return wrap(*n.kids[0], precedence(*n.kids[0]) <= p) + "^" + wrap(*n.kids[1], precedence(*n.kids[1]) < 3);
        case Op::Call: {
            std::string s = std::string(fn_name(n.fn)) + "(";
            for (std::size_t i = 0; i < n.kids.size(); ++i) s += (i ? ", " : "") + print(*n.kids[i]);
            return s + ")";
        }
    }
    return "?";
}

double eval(const Expr::Node& n, const Vec& x, double t, double r) {
    const auto arg = [&](int i) { return eval(*n.kids[i], x, t, r); };
    switch (n.op) {
        case Op::Num: return n.value;
        case Op::Var: return x[n.index];
        case Op::Norm: return x.norm();
        case Op::T: return t;
        case Op::R: return r;
        case Op::Neg: return -arg(0);
        case Op::Add: return arg(0) + arg(1);
        case Op::Sub: return arg(0) - arg(1);
        case Op::Mul: return arg(0) * arg(1);
        case Op::Div: {
            const double a = arg(0), b = arg(1);
            if (b == 0.0) throw EvalError("division by zero in '" + print(n) + "'");
            return a / b;
        }
        case Op::Pow: {
            const double a = arg(0), b = arg(1);
            const double v = std::pow(a, b);
            if (std::isnan(v) && !std::isnan(a) && !std::isnan(b)) {
                throw EvalError("negative base to a fractional power in '" + print(n) + "' (use spow)");
            }
            if (a == 0.0 && b < 0.0) throw EvalError("division by zero in '" + print(n) + "'");
            return v;
        }
        case Op::Call: {
            const double a = arg(0);
            switch (n.fn) {
                case Fn::Sin: return std::sin(a);
                case Fn::Cos: return std::cos(a);
                case Fn::Exp: return std::exp(a);
                case Fn::Log:
                    if (!(a > 0.0)) throw EvalError("log of a non-positive value in '" + print(n) + "'");
                    return std::log(a);
                case Fn::Abs: return std::abs(a);
                case Fn::Sign: return a > 0.0 ? 1.0 : (a < 0.0 ? -1.0 : 0.0);
                case Fn::Sqrt:
                    if (a < 0.0) throw EvalError("sqrt of a negative value in '" + print(n) + "'");
                    return std::sqrt(a);
                case Fn::Spow: return spow(a, arg(1));
                case Fn::Min: return std::min(a, arg(1));
                case Fn::Max: return std::max(a, arg(1));
            }
        }
    }
    return 0.0;
}

bool constant_tree(const Expr::Node& n) {
    if (n.op == Op::Var || n.op == Op::Norm || n.op == Op::T || n.op == Op::R) return false;
    for (const auto& k : n.kids) {
        if (!constant_tree(*k)) return false;
    }
    return true;
}

}  // namespace

std::string format_number(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

Expr::Expr() : root_(make(Op::Num)) {}

Expr Expr::parse(const std::string& text, const ExprSymbols& sym) {
    Expr e;
    e.root_ = Parser(text, sym).parse();
    return e;
}

Expr Expr::constant(double c) {
    auto n = std::make_shared<Node>();
    n->value = c;
    Expr e;
    e.root_ = n;
    return e;
}

double Expr::operator()(const Vec& x, double t, double r) const { return eval(*root_, x, t, r); }

std::string Expr::to_string() const { return print(*root_); }

bool Expr::is_constant() const { return constant_tree(*root_); }

}  // namespace jumpsde
