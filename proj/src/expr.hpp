#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

namespace bayesperf {

// Arithmetic expression over event values, written as s-expressions:
//   expr := event | number | (op expr expr ...)
//   op   := add | sub | mul | div
// add and mul take two or more arguments, sub and div exactly two.
struct Expr {
    enum class Kind { kVar, kConst, kAdd, kSub, kMul, kDiv };

    Kind kind = Kind::kConst;
    std::string var;      // kVar
    double value = 0.0;   // kConst
    std::vector<Expr> args;

    static Expr variable(std::string name);
    static Expr constant(double v);
};

Expr parse_expr(const std::string& text);  // throws ParseError
std::string expr_to_string(const Expr& expr);

// Event names referenced anywhere in the expression.
std::set<std::string> expr_variables(const Expr& expr);

// Event names appearing inside a div denominator (these must stay nonzero).
std::set<std::string> expr_denominator_variables(const Expr& expr);

// Throws UnknownEventError when a referenced event has no value and
// DivisionByZeroError on a zero denominator.
double eval_expr(const Expr& expr, const std::map<std::string, double>& values);

}  // namespace bayesperf
