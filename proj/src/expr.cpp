#include "expr.hpp"

#include <cctype>
#include <cstdlib>

#include "errors.hpp"
#include "io_util.hpp"

namespace bayesperf {

Expr Expr::variable(std::string name) {
    Expr e;
    e.kind = Kind::kVar;
    e.var = std::move(name);
    return e;
}

Expr Expr::constant(double v) {
    Expr e;
    e.kind = Kind::kConst;
    e.value = v;
    return e;
}

namespace {

struct Parser {
    const std::string& text;
    std::size_t pos = 0;

    explicit Parser(const std::string& t) : text(t) {}

    void skip_space() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("expression '" + text + "' at offset " + std::to_string(pos) + ": " +
                         msg);
    }

    std::string token() {
        const std::size_t start = pos;
        while (pos < text.size() && !std::isspace(static_cast<unsigned char>(text[pos])) &&
               text[pos] != '(' && text[pos] != ')')
            ++pos;
        if (pos == start) fail("expected a token");
        return text.substr(start, pos - start);
    }

    Expr parse() {
        skip_space();
        if (pos >= text.size()) fail("unexpected end of input");
        if (text[pos] == '(') return parse_list();
        return parse_atom();
    }

    Expr parse_atom() {
        const std::string tok = token();
        // Numbers start with a digit, '.', '+' or '-' followed by a digit.
        const char c0 = tok[0];
        const bool numeric =
            std::isdigit(static_cast<unsigned char>(c0)) || c0 == '.' ||
            ((c0 == '+' || c0 == '-') && tok.size() > 1 &&
             (std::isdigit(static_cast<unsigned char>(tok[1])) || tok[1] == '.'));
        if (numeric) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) fail("bad number '" + tok + "'");
            return Expr::constant(v);
        }
        return Expr::variable(tok);
    }

    Expr parse_list() {
        ++pos;  // '('
        skip_space();
        const std::string op = token();
        Expr e;
        if (op == "add") {
            e.kind = Expr::Kind::kAdd;
        } else if (op == "sub") {
            e.kind = Expr::Kind::kSub;
        } else if (op == "mul") {
            e.kind = Expr::Kind::kMul;
        } else if (op == "div") {
            e.kind = Expr::Kind::kDiv;
        } else {
            fail("unknown operator '" + op + "'");
        }
        while (true) {
            skip_space();
            if (pos >= text.size()) fail("missing ')'");
            if (text[pos] == ')') {
                ++pos;
                break;
            }
            e.args.push_back(parse());
        }
        const std::size_t n = e.args.size();
        if (e.kind == Expr::Kind::kSub || e.kind == Expr::Kind::kDiv) {
            if (n != 2) fail("'" + op + "' takes exactly 2 arguments");
        } else if (n < 2) {
            fail("'" + op + "' takes at least 2 arguments");
        }
        return e;
    }
};

const char* op_name(Expr::Kind kind) {
    switch (kind) {
        case Expr::Kind::kAdd: return "add";
        case Expr::Kind::kSub: return "sub";
        case Expr::Kind::kMul: return "mul";
        case Expr::Kind::kDiv: return "div";
        default: return "?";
    }
}

void collect_variables(const Expr& expr, std::set<std::string>& out) {
    if (expr.kind == Expr::Kind::kVar) out.insert(expr.var);
    for (const auto& arg : expr.args) collect_variables(arg, out);
}

void collect_denominators(const Expr& expr, std::set<std::string>& out) {
    if (expr.kind == Expr::Kind::kDiv) {
        collect_variables(expr.args[1], out);
        collect_denominators(expr.args[0], out);
        collect_denominators(expr.args[1], out);
        return;
    }
    for (const auto& arg : expr.args) collect_denominators(arg, out);
}

}  // namespace

Expr parse_expr(const std::string& text) {
    Parser parser(text);
    Expr e = parser.parse();
    parser.skip_space();
    if (parser.pos != text.size()) parser.fail("trailing input");
    return e;
}

std::string expr_to_string(const Expr& expr) {
    switch (expr.kind) {
        case Expr::Kind::kVar: return expr.var;
        case Expr::Kind::kConst: return format_double(expr.value);
        default: break;
    }
    std::string out = "(";
    out += op_name(expr.kind);
    for (const auto& arg : expr.args) {
        out += ' ';
        out += expr_to_string(arg);
    }
    out += ')';
    return out;
}

std::set<std::string> expr_variables(const Expr& expr) {
    std::set<std::string> out;
    collect_variables(expr, out);
    return out;
}

std::set<std::string> expr_denominator_variables(const Expr& expr) {
    std::set<std::string> out;
    collect_denominators(expr, out);
    return out;
}

double eval_expr(const Expr& expr, const std::map<std::string, double>& values) {
    switch (expr.kind) {
        case Expr::Kind::kVar: {
            const auto it = values.find(expr.var);
            if (it == values.end()) throw UnknownEventError(expr.var);
            return it->second;
        }
        case Expr::Kind::kConst:
            return expr.value;
        case Expr::Kind::kAdd: {
            double sum = 0.0;
            for (const auto& arg : expr.args) sum += eval_expr(arg, values);
            return sum;
        }
        case Expr::Kind::kSub:
            return eval_expr(expr.args[0], values) - eval_expr(expr.args[1], values);
        case Expr::Kind::kMul: {
            double prod = 1.0;
            for (const auto& arg : expr.args) prod *= eval_expr(arg, values);
            return prod;
        }
        case Expr::Kind::kDiv: {
            const double num = eval_expr(expr.args[0], values);
            const double den = eval_expr(expr.args[1], values);
            if (den == 0.0) throw DivisionByZeroError(expr_to_string(expr));
            return num / den;
        }
    }
    throw NumericError("corrupt expression node");
}

}  // namespace bayesperf
