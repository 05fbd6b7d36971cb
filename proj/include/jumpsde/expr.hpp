#pragma once

#include "jumpsde/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace jumpsde {

/// Parse errors carry the 0-based character offset in the source text.
class ExprError : public Error {
public:
    ExprError(const std::string& what, std::size_t pos) : Error("cli", what), pos_(pos) {}
    std::size_t position() const noexcept { return pos_; }

private:
    std::size_t pos_;
};
class SyntaxError : public ExprError {
public:
    using ExprError::ExprError;
};
class UnknownSymbol : public ExprError {
public:
    using ExprError::ExprError;
};
class DimensionMismatch : public ExprError {
public:
    using ExprError::ExprError;
};
/// log/sqrt of a negative number or division by zero; `what()` names the
/// offending subexpression.
class EvalError : public Error {
public:
    explicit EvalError(const std::string& what) : Error("cli", what) {}
};

/// Which free symbols an expression may use besides x1..xd and |x|.
struct ExprSymbols {
    int d = 1;
    bool t = false;   ///< time, for the Cauchy problem
    bool r = false;   ///< scalar argument, for radial profiles and moduli
};

/// Coefficient expression: literals, x1..xd, |x| (also norm), t, r, pi,
/// + - * / ^, and sin cos exp log abs sign sqrt spow(x, p) min max.
class Expr {
public:
    Expr();
    static Expr parse(const std::string& text, const ExprSymbols& sym);
    static Expr constant(double c);

    double operator()(const Vec& x, double t = 0.0, double r = 0.0) const;
    /// Canonical text; parse(to_string()) prints the same text again.
    std::string to_string() const;
    bool is_constant() const;

    struct Node;

private:
    std::shared_ptr<const Node> root_;
};

/// Shortest decimal that reads back to the same double.
std::string format_number(double v);

}  // namespace jumpsde
