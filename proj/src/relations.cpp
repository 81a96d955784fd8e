#include "relations.hpp"

#include <algorithm>
#include <cmath>

#include "errors.hpp"
#include "io_util.hpp"

namespace bayesperf {

std::set<std::string> RelationFactor::scope() const {
    std::set<std::string> vars = expr_variables(lhs);
    for (const auto& v : expr_variables(rhs)) vars.insert(v);
    return vars;
}

RelationSet relations_from_json(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("factors"))
        throw SchemaError("relations file must be an object with a 'factors' array");
    RelationSet out;
    for (const auto& fj : j.at("factors")) {
        if (!fj.is_object()) throw SchemaError("factor must be a JSON object");
        RelationFactor f;
        if (!fj.contains("id") || !fj.contains("lhs") || !fj.contains("rhs"))
            throw SchemaError("factor needs 'id', 'lhs' and 'rhs'");
        f.id = fj.at("id").get<std::string>();
        f.lhs = parse_expr(fj.at("lhs").get<std::string>());
        f.rhs = parse_expr(fj.at("rhs").get<std::string>());
        if (fj.contains("slack_sigma")) f.slack_sigma = fj.at("slack_sigma").get<double>();
        if (fj.contains("slack_mode")) {
            const std::string mode = fj.at("slack_mode").get<std::string>();
            if (mode == "absolute") {
                f.slack_absolute = true;
            } else if (mode != "relative") {
                throw SchemaError("factor " + f.id + ": unknown slack_mode '" + mode + "'");
            }
        }
        if (!(f.slack_sigma > 0))
            throw SchemaError("factor " + f.id + ": slack_sigma must be > 0");
        if (fj.contains("params"))
            for (const auto& [key, value] : fj.at("params").items())
                f.params[key] = value.get<double>();
        if (f.scope().empty())
            throw SchemaError("factor " + f.id + " references no events");
        out.factors.push_back(std::move(f));
    }
    return out;
}

nlohmann::json relations_to_json(const RelationSet& relations) {
    nlohmann::json j;
    j["factors"] = nlohmann::json::array();
    for (const auto& f : relations.factors) {
        nlohmann::json fj;
        fj["id"] = f.id;
        fj["lhs"] = expr_to_string(f.lhs);
        fj["rhs"] = expr_to_string(f.rhs);
        fj["slack_sigma"] = f.slack_sigma;
        if (f.slack_absolute) fj["slack_mode"] = "absolute";
        if (!f.params.empty()) fj["params"] = f.params;
        j["factors"].push_back(std::move(fj));
    }
    return j;
}

RelationSet load_relations(const std::string& path) {
    return relations_from_json(load_json(path));
}

double factor_sigma(const RelationFactor& factor, const std::map<std::string, double>& values) {
    if (factor.slack_absolute) return factor.slack_sigma;
    const double l = eval_expr(factor.lhs, values);
    const double r = eval_expr(factor.rhs, values);
    return factor.slack_sigma * std::max({std::fabs(l), std::fabs(r), 1.0});
}

double evaluate_factor(const RelationFactor& factor, const std::map<std::string, double>& values) {
    const double l = eval_expr(factor.lhs, values);
    const double r = eval_expr(factor.rhs, values);
    const double scale =
        factor.slack_absolute ? 1.0 : std::max({std::fabs(l), std::fabs(r), 1.0});
    const double sigma = factor.slack_sigma * scale;
    const double z = (l - r) / sigma;
    const double logd = -0.5 * z * z;
    if (!std::isfinite(logd))
        throw NumericError("factor " + factor.id + " produced a non-finite log-density");
    return logd;
}

FactorGraph::FactorGraph(const EventCatalog& catalog, const RelationSet& relations)
    : factors_(relations.factors) {
    std::set<std::string> ids;
    for (const auto& e : catalog.events) {
        variables_.push_back(e.name);
        by_event_[e.name] = {};
    }
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        const auto& f = factors_[i];
        if (!ids.insert(f.id).second) throw DuplicateFactorIdError(f.id);
        std::set<std::string> scope = f.scope();
        for (const auto& v : scope) {
            if (!catalog.has_event(v)) throw UnknownEventError(v);
            by_event_[v].push_back(i);
        }
        scopes_.push_back(std::move(scope));
    }
}

bool FactorGraph::has_variable(const std::string& event) const {
    return by_event_.count(event) != 0;
}

const std::vector<std::size_t>& FactorGraph::factors_of(const std::string& event) const {
    const auto it = by_event_.find(event);
    if (it == by_event_.end()) throw UnknownEventError(event);
    return it->second;
}

const std::set<std::string>& FactorGraph::scope(std::size_t factor_index) const {
    return scopes_.at(factor_index);
}

std::set<std::string> FactorGraph::markov_blanket(const std::set<std::string>& targets) const {
    std::set<std::string> blanket;
    for (const auto& t : targets)
        for (std::size_t fi : factors_of(t))
            blanket.insert(scopes_[fi].begin(), scopes_[fi].end());
    for (const auto& t : targets) blanket.erase(t);
    return blanket;
}

std::set<std::string> FactorGraph::markov_blanket(const std::string& target) const {
    return markov_blanket(std::set<std::string>{target});
}

std::set<std::string> FactorGraph::closed_neighborhood(const std::set<std::string>& targets) const {
    std::set<std::string> out = markov_blanket(targets);
    out.insert(targets.begin(), targets.end());
    return out;
}

bool FactorGraph::adjacent(const std::string& a, const std::string& b) const {
    if (a == b) return false;
    for (std::size_t fi : factors_of(a))
        if (scopes_[fi].count(b)) return true;
    return false;
}

namespace {

// If expr is a bare variable absent from values while the opposite side fully
// evaluates, returns that variable name.
std::optional<std::string> assignable_unknown(const Expr& side, const Expr& other,
                                              const std::map<std::string, double>& values) {
    if (side.kind != Expr::Kind::kVar || values.count(side.var)) return std::nullopt;
    for (const auto& v : expr_variables(other))
        if (!values.count(v)) return std::nullopt;
    return side.var;
}

}  // namespace

std::map<std::string, double> close_over_relations(const RelationSet& relations,
                                                   std::map<std::string, double> values) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& f : relations.factors) {
            try {
                if (auto unknown = assignable_unknown(f.lhs, f.rhs, values)) {
                    values[*unknown] = eval_expr(f.rhs, values);
                    changed = true;
                } else if (auto unknown2 = assignable_unknown(f.rhs, f.lhs, values)) {
                    values[*unknown2] = eval_expr(f.lhs, values);
                    changed = true;
                }
            } catch (const DivisionByZeroError&) {
                // Leave the unknown unset; the caller reports underdetermined
                // events with better context.
            }
        }
    }
    return values;
}

std::optional<double> solve_unknown(const RelationFactor& factor,
                                    const std::map<std::string, double>& values,
                                    const std::string& unknown, double hint) {
    auto residual = [&](double x) -> std::optional<double> {
        std::map<std::string, double> v = values;
        v[unknown] = x;
        try {
            const double r = eval_expr(factor.lhs, v) - eval_expr(factor.rhs, v);
            if (!std::isfinite(r)) return std::nullopt;
            return r;
        } catch (const Error&) {
            return std::nullopt;
        }
    };

    // Direct orientation first.
    {
        std::map<std::string, double> v = values;
        try {
            if (factor.lhs.kind == Expr::Kind::kVar && factor.lhs.var == unknown)
                return eval_expr(factor.rhs, v);
            if (factor.rhs.kind == Expr::Kind::kVar && factor.rhs.var == unknown)
                return eval_expr(factor.lhs, v);
        } catch (const Error&) {
            return std::nullopt;
        }
    }

    // Secant from the hint.
    double x0 = hint, x1 = hint * 1.5 + 1e-6;
    auto f0 = residual(x0), f1 = residual(x1);
    for (int i = 0; i < 60 && f0 && f1; ++i) {
        if (std::fabs(*f1) < 1e-12 * std::max(1.0, std::fabs(x1))) return x1;
        const double denom = *f1 - *f0;
        if (denom == 0.0) break;
        const double x2 = x1 - *f1 * (x1 - x0) / denom;
        if (!std::isfinite(x2)) break;
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = residual(x1);
    }
    if (f1 && std::fabs(*f1) < 1e-9 * std::max(1.0, std::fabs(x1))) return x1;

    // Expanding bracket over the positive range, then bisection.
    double lo = 0.0, hi = 0.0;
    std::optional<double> flo, fhi;
    for (double x = 1e-9; x <= 1e15; x *= 4.0) {
        const auto fx = residual(x);
        if (!fx) continue;
        if (flo && ((*flo < 0) != (*fx < 0))) {
            hi = x;
            fhi = fx;
            break;
        }
        lo = x;
        flo = fx;
    }
    if (!flo || !fhi) return std::nullopt;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        const auto fm = residual(mid);
        if (!fm) return std::nullopt;
        if ((*fm < 0) == (*flo < 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace bayesperf
