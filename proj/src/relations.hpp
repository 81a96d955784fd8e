#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "event_model.hpp"
#include "expr.hpp"

namespace bayesperf {

// Soft algebraic constraint between event values. The residual
// value(lhs) - value(rhs) is penalized under a Gaussian with
// sigma = slack_sigma * scale, where scale = max(|lhs|, |rhs|, 1) at the
// current values (or 1 when the slack is absolute).
struct RelationFactor {
    std::string id;
    Expr lhs;
    Expr rhs;
    double slack_sigma = 0.01;
    bool slack_absolute = false;
    std::map<std::string, double> params;

    std::set<std::string> scope() const;
};

struct RelationSet {
    std::vector<RelationFactor> factors;
};

RelationSet relations_from_json(const nlohmann::json& j);
nlohmann::json relations_to_json(const RelationSet& relations);
RelationSet load_relations(const std::string& path);

// Log-density contribution of one factor at the given values:
// -(r / sigma)^2 / 2. Zero exactly when value(lhs) == value(rhs).
double evaluate_factor(const RelationFactor& factor, const std::map<std::string, double>& values);

// The sigma the factor uses at these values.
double factor_sigma(const RelationFactor& factor, const std::map<std::string, double>& values);

// Bipartite graph between catalog events and relation factors. Isolated
// events (no factor) are still variables.
class FactorGraph {
public:
    FactorGraph(const EventCatalog& catalog, const RelationSet& relations);

    const std::vector<RelationFactor>& factors() const { return factors_; }
    const std::vector<std::string>& variables() const { return variables_; }
    bool has_variable(const std::string& event) const;

    // Factor indices whose scope contains the event.
    const std::vector<std::size_t>& factors_of(const std::string& event) const;
    const std::set<std::string>& scope(std::size_t factor_index) const;

    // Events co-scoped with any target through at least one factor, excluding
    // the targets themselves. Throws UnknownEventError for unknown targets.
    std::set<std::string> markov_blanket(const std::set<std::string>& targets) const;
    std::set<std::string> markov_blanket(const std::string& target) const;

    // markov_blanket plus the targets.
    std::set<std::string> closed_neighborhood(const std::set<std::string>& targets) const;

    // True when the two events share at least one factor.
    bool adjacent(const std::string& a, const std::string& b) const;

private:
    std::vector<RelationFactor> factors_;
    std::vector<std::string> variables_;
    std::vector<std::set<std::string>> scopes_;
    std::map<std::string, std::vector<std::size_t>> by_event_;
};

// Repeatedly assigns unknown events from factors whose other side is fully
// known and single-variable on the unknown side (lhs or rhs). Returns the
// augmented value map; stops at a fixpoint.
std::map<std::string, double> close_over_relations(const RelationSet& relations,
                                                   std::map<std::string, double> values);

// Numerically solves one factor's residual for a single unknown event, given
// values for every other scope event. Used to seed priors for never-observed
// events. Returns nullopt when no root is found.
std::optional<double> solve_unknown(const RelationFactor& factor,
                                    const std::map<std::string, double>& values,
                                    const std::string& unknown, double hint);

}  // namespace bayesperf
