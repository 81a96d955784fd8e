#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "event_model.hpp"
#include "relations.hpp"

namespace bayesperf {

// True when the closed neighborhoods of the two event sets intersect: they
// share an event, an event of one lies in the other's Markov blanket, or the
// blankets themselves intersect. This is the invariant adjacent slices of a
// transformed schedule must satisfy.
bool blankets_overlap(const FactorGraph& graph, const std::set<std::string>& events_a,
                      const std::set<std::string>& events_b);

// Stronger per-pair link used when building chains: some event of one set
// equals, or shares a factor with, an event of the other. Repeated events and
// directly related events carry information between consecutive slices;
// blanket-only overlap does not place any connecting measurement.
bool chain_linked(const FactorGraph& graph, const std::set<std::string>& events_a,
                  const std::set<std::string>& events_b);

// Finds a valid configuration measuring exactly the given programmable
// events, or nullopt when none exists (capacity, exclusion or placement
// conflicts). Placement assigns most-constrained events first and resolves
// counter contention by augmenting-path matching.
std::optional<Configuration> place_events(const EventCatalog& catalog,
                                          const std::set<std::string>& events);

// Minimum-hop path between two events in the variable adjacency graph (one
// hop = one shared factor). Intermediate events must be placeable in some
// valid configuration; endpoints are exempt. Deterministic: among shortest
// paths the lexicographically smallest is returned. Throws NoPathError when
// the events are disconnected or every shortest route is blocked.
std::vector<std::string> shortest_dependency_path(const FactorGraph& graph,
                                                  const EventCatalog& catalog,
                                                  const std::string& from, const std::string& to);

std::optional<std::vector<std::string>> try_shortest_dependency_path(
    const FactorGraph& graph, const EventCatalog& catalog, const std::string& from,
    const std::string& to);

// Pruning rule: when all events of an intermediate step share a common
// blanket event e*, the step is condensed to {e*}. Only applied when e* is
// placeable and the chain links to both neighbors survive.
std::vector<Configuration> condense_common_steps(const EventCatalog& catalog,
                                                 const FactorGraph& graph,
                                                 const std::set<std::string>& prev_events,
                                                 std::vector<Configuration> steps,
                                                 const std::set<std::string>& next_events);

// Pruning rule: drops an intermediate step whose union Markov blanket equals
// the previous step's, provided the surrounding chain links survive.
std::vector<Configuration> drop_redundant_steps(const FactorGraph& graph,
                                                const std::set<std::string>& prev_events,
                                                std::vector<Configuration> steps,
                                                const std::set<std::string>& next_events);

struct TransformResult {
    Schedule schedule;
    std::vector<bool> inserted;  // parallel to schedule.slices
    int n_inserted = 0;
    int n_breaks = 0;
};

// Rewrites a requested schedule so that consecutive slices form dependency
// chains: pairs that are not chain-linked get a minimal sequence of valid
// intermediate configurations; when no chain exists the slice is marked with
// a break. Requested slices are never modified or reordered. Throws
// InvalidScheduleError when a requested slice is invalid.
TransformResult transform_schedule(const EventCatalog& catalog, const FactorGraph& graph,
                                   const Schedule& requested);

}  // namespace bayesperf
