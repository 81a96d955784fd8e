#include "scheduler.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>

#include "errors.hpp"
#include "log.hpp"

namespace bayesperf {

bool blankets_overlap(const FactorGraph& graph, const std::set<std::string>& events_a,
                      const std::set<std::string>& events_b) {
    const auto na = graph.closed_neighborhood(events_a);
    const auto nb = graph.closed_neighborhood(events_b);
    for (const auto& e : na)
        if (nb.count(e)) return true;
    return false;
}

bool chain_linked(const FactorGraph& graph, const std::set<std::string>& events_a,
                  const std::set<std::string>& events_b) {
    for (const auto& a : events_a) {
        if (events_b.count(a)) return true;
        for (const auto& b : events_b)
            if (graph.adjacent(a, b)) return true;
    }
    return false;
}

std::optional<Configuration> place_events(const EventCatalog& catalog,
                                          const std::set<std::string>& events) {
    if (static_cast<int>(events.size()) > catalog.capacity()) return std::nullopt;
    for (const auto& e : events) {
        if (catalog.event(e).kind == EventKind::kFixed) return std::nullopt;
        for (const auto& other : catalog.exclusions(e))
            if (events.count(other)) return std::nullopt;
    }

    // Most-constrained events claim counters first; contention is resolved by
    // augmenting-path matching.
    std::vector<std::string> order(events.begin(), events.end());
    std::stable_sort(order.begin(), order.end(),
                     [&](const std::string& a, const std::string& b) {
                         const auto pa = catalog.placeable_counters(a).size();
                         const auto pb = catalog.placeable_counters(b).size();
                         if (pa != pb) return pa < pb;
                         return a < b;
                     });

    std::map<int, std::string> counter_to_event;
    std::map<std::string, int> event_to_counter;
    std::function<bool(const std::string&, std::set<int>&)> assign =
        [&](const std::string& event, std::set<int>& visited) -> bool {
        for (int counter : catalog.placeable_counters(event)) {
            if (visited.count(counter)) continue;
            visited.insert(counter);
            const auto occupant = counter_to_event.find(counter);
            if (occupant == counter_to_event.end() || assign(occupant->second, visited)) {
                if (occupant != counter_to_event.end())
                    event_to_counter.erase(occupant->second);
                counter_to_event[counter] = event;
                event_to_counter[event] = counter;
                return true;
            }
        }
        return false;
    };

    for (const auto& e : order) {
        std::set<int> visited;
        if (!assign(e, visited)) return std::nullopt;
    }
    std::map<int, std::string> assignments;
    for (const auto& [counter, event] : counter_to_event) assignments[counter] = event;
    return Configuration::from_assignments(assignments);
}

namespace {

// Variable adjacency (one shared factor) restricted to the graph's events.
std::map<std::string, std::set<std::string>> build_adjacency(const FactorGraph& graph) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& v : graph.variables()) adj[v];
    for (std::size_t fi = 0; fi < graph.factors().size(); ++fi) {
        const auto& scope = graph.scope(fi);
        for (const auto& a : scope)
            for (const auto& b : scope)
                if (a != b) adj[a].insert(b);
    }
    return adj;
}

bool event_placeable(const EventCatalog& catalog, const std::string& event) {
    if (catalog.event(event).kind == EventKind::kFixed) return false;
    return !catalog.placeable_counters(event).empty();
}

}  // namespace

std::optional<std::vector<std::string>> try_shortest_dependency_path(
    const FactorGraph& graph, const EventCatalog& catalog, const std::string& from,
    const std::string& to) {
    graph.factors_of(from);
    graph.factors_of(to);
    if (from == to) return std::vector<std::string>{from};

    const auto adj = build_adjacency(graph);
    auto enterable = [&](const std::string& v) {
        return v == from || v == to || event_placeable(catalog, v);
    };

    auto bfs = [&](const std::string& source) {
        std::map<std::string, int> dist;
        dist[source] = 0;
        std::vector<std::string> frontier{source};
        while (!frontier.empty()) {
            std::vector<std::string> next;
            for (const auto& u : frontier) {
                for (const auto& v : adj.at(u)) {
                    if (!enterable(v) || dist.count(v)) continue;
                    dist[v] = dist[u] + 1;
                    next.push_back(v);
                }
            }
            frontier = std::move(next);
        }
        return dist;
    };

    const auto dist_from = bfs(from);
    const auto dist_to = bfs(to);
    const auto it = dist_from.find(to);
    if (it == dist_from.end()) return std::nullopt;
    const int d = it->second;

    // Walk forward, always taking the smallest-named neighbor that stays on
    // some shortest path.
    std::vector<std::string> path{from};
    std::string cur = from;
    while (cur != to) {
        const int dcur = dist_from.at(cur);
        std::optional<std::string> best;
        for (const auto& v : adj.at(cur)) {
            if (!enterable(v)) continue;
            const auto df = dist_from.find(v);
            const auto dt = dist_to.find(v);
            if (df == dist_from.end() || dt == dist_to.end()) continue;
            if (df->second != dcur + 1 || df->second + dt->second != d) continue;
            if (!best || v < *best) best = v;
        }
        if (!best) return std::nullopt;  // placement blocked along every shortest route
        path.push_back(*best);
        cur = *best;
    }
    return path;
}

std::vector<std::string> shortest_dependency_path(const FactorGraph& graph,
                                                  const EventCatalog& catalog,
                                                  const std::string& from,
                                                  const std::string& to) {
    auto path = try_shortest_dependency_path(graph, catalog, from, to);
    if (!path) throw NoPathError(from, to);
    return *path;
}

namespace {

std::set<std::string> union_blankets(const FactorGraph& graph,
                                     const std::set<std::string>& events) {
    std::set<std::string> out;
    for (const auto& e : events) {
        const auto b = graph.markov_blanket(e);
        out.insert(b.begin(), b.end());
    }
    return out;
}

// --- exact minimal-insertion search -----------------------------------------
//
// States are events reachable at the end of a chain of inserted slices. A
// slice continues a chain when one of its events equals or shares a factor
// with a reachable event of the previous slice; within a slice the chain can
// only spread across events connected in the slice's induced adjacency.

constexpr std::size_t kMaxCandidates = 200000;

struct Candidate {
    std::uint64_t mask = 0;
    std::vector<int> members;
    Configuration config;
};

struct ChainIndex {
    std::vector<std::string> prog;  // placeable programmable events, sorted
    std::map<std::string, int> id;
    std::vector<std::uint64_t> adj;  // adjacency among prog events
    std::vector<Candidate> candidates;
    bool exact = false;  // false: fall back to greedy path packing
};

ChainIndex build_chain_index(const EventCatalog& catalog, const FactorGraph& graph) {
    ChainIndex idx;
    for (const auto& e : catalog.events)
        if (e.kind == EventKind::kProgrammable && event_placeable(catalog, e.name))
            idx.prog.push_back(e.name);
    std::sort(idx.prog.begin(), idx.prog.end());
    if (idx.prog.size() > 64) return idx;
    for (std::size_t i = 0; i < idx.prog.size(); ++i) idx.id[idx.prog[i]] = static_cast<int>(i);

    idx.adj.assign(idx.prog.size(), 0);
    for (std::size_t fi = 0; fi < graph.factors().size(); ++fi) {
        std::vector<int> members;
        for (const auto& v : graph.scope(fi)) {
            const auto it = idx.id.find(v);
            if (it != idx.id.end()) members.push_back(it->second);
        }
        for (int a : members)
            for (int b : members)
                if (a != b) idx.adj[a] |= 1ULL << b;
    }

    // Enumerate connected event sets up to the capacity (ESU-style, each set
    // once), keeping those with a valid placement.
    const int cap = std::min<int>(catalog.capacity(), 8);
    const int n = static_cast<int>(idx.prog.size());
    bool overflow = false;
    std::vector<std::uint64_t> masks;

    std::function<void(std::uint64_t, std::uint64_t, std::uint64_t, std::uint64_t)> extend =
        [&](std::uint64_t above, std::uint64_t sub, std::uint64_t ext, std::uint64_t seen) {
            if (overflow) return;
            masks.push_back(sub);
            if (masks.size() > kMaxCandidates) {
                overflow = true;
                return;
            }
            if (__builtin_popcountll(sub) >= cap) return;
            while (ext) {
                const int v = __builtin_ctzll(ext);
                ext &= ext - 1;
                const std::uint64_t excl = idx.adj[v] & above & ~seen;
                extend(above, sub | (1ULL << v), ext | excl, seen | idx.adj[v] | (1ULL << v));
            }
        };
    for (int s = 0; s < n && !overflow; ++s) {
        const std::uint64_t above = s + 1 >= 64 ? 0 : ~((1ULL << (s + 1)) - 1);
        extend(above, 1ULL << s, idx.adj[s] & above, idx.adj[s] | (1ULL << s));
    }
    if (overflow) {
        BP_LOG_INFO("scheduler: candidate space too large, using greedy packing");
        return idx;
    }

    for (const std::uint64_t mask : masks) {
        Candidate c;
        c.mask = mask;
        std::set<std::string> events;
        for (int i = 0; i < n; ++i)
            if (mask & (1ULL << i)) {
                c.members.push_back(i);
                events.insert(idx.prog[i]);
            }
        auto config = place_events(catalog, events);
        if (!config) continue;
        c.config = *config;
        idx.candidates.push_back(std::move(c));
    }

    // Larger fills first, then lexicographic by member names.
    std::sort(idx.candidates.begin(), idx.candidates.end(),
              [&](const Candidate& a, const Candidate& b) {
                  if (a.members.size() != b.members.size())
                      return a.members.size() > b.members.size();
                  return a.members < b.members;  // ids follow name order
              });
    idx.exact = true;
    return idx;
}

std::uint64_t event_mask(const ChainIndex& idx, const std::set<std::string>& events) {
    std::uint64_t mask = 0;
    for (const auto& e : events) {
        const auto it = idx.id.find(e);
        if (it != idx.id.end()) mask |= 1ULL << it->second;
    }
    return mask;
}

// Reachable part of the candidate given entry events: union of the connected
// components (within the candidate's induced adjacency) touching an entry.
std::uint64_t reachable_in_candidate(const ChainIndex& idx, const Candidate& c,
                                     std::uint64_t entries) {
    std::uint64_t result = entries & c.mask;
    bool grew = true;
    while (grew) {
        grew = false;
        for (int m : c.members) {
            const std::uint64_t bit = 1ULL << m;
            if ((result & bit) || !(idx.adj[m] & result)) continue;
            result |= bit;
            grew = true;
        }
    }
    return result;
}

std::optional<std::vector<const Candidate*>> min_insertion(const ChainIndex& idx,
                                                           const std::set<std::string>& from,
                                                           const std::set<std::string>& to) {
    const std::uint64_t goal = event_mask(idx, to);
    std::uint64_t frontier = event_mask(idx, from);
    if (!frontier || !goal) return std::nullopt;

    const int n = static_cast<int>(idx.prog.size());
    std::vector<int> layer(n, -1);
    std::vector<int> parent_cand(n, -1);
    std::vector<int> parent_event(n, -1);
    for (int i = 0; i < n; ++i)
        if (frontier & (1ULL << i)) layer[i] = 0;

    for (int k = 0; frontier; ++k) {
        std::uint64_t reach = frontier;
        for (int i = 0; i < n; ++i)
            if (frontier & (1ULL << i)) reach |= idx.adj[i];

        std::uint64_t next = 0;
        for (std::size_t ci = 0; ci < idx.candidates.size(); ++ci) {
            const Candidate& c = idx.candidates[ci];
            const std::uint64_t entries = c.mask & reach;
            if (!entries) continue;
            const std::uint64_t reached = reachable_in_candidate(idx, c, entries);
            std::uint64_t fresh = reached;
            for (int m : c.members)
                if (layer[m] >= 0) fresh &= ~(1ULL << m);
            if (!fresh) continue;

            // Deterministic provenance: smallest entry event, then smallest
            // frontier event within distance 1 of it.
            const int entry = __builtin_ctzll(entries);
            int source = -1;
            for (int i = 0; i < n; ++i) {
                if (!(frontier & (1ULL << i))) continue;
                if (i == entry || (idx.adj[i] & (1ULL << entry))) {
                    source = i;
                    break;
                }
            }
            for (int m : c.members) {
                const std::uint64_t bit = 1ULL << m;
                if (!(fresh & bit)) continue;
                layer[m] = k + 1;
                parent_cand[m] = static_cast<int>(ci);
                parent_event[m] = source;
                next |= bit;
            }
        }
        if (!next) return std::nullopt;

        // Chain complete once a fresh event links to the goal slice.
        int done = -1;
        for (int i = 0; i < n && done < 0; ++i) {
            if (!(next & (1ULL << i))) continue;
            if ((goal & (1ULL << i)) || (idx.adj[i] & goal)) done = i;
        }
        if (done >= 0) {
            std::vector<const Candidate*> result;
            int cur = done;
            while (layer[cur] > 0) {
                result.push_back(&idx.candidates[parent_cand[cur]]);
                cur = parent_event[cur];
            }
            std::reverse(result.begin(), result.end());
            return result;
        }
        frontier = next;
    }
    return std::nullopt;
}

// Fallback for oversized catalogs: pack the intermediates of one shortest
// dependency path greedily into maximal valid prefixes.
std::optional<std::vector<Configuration>> greedy_pack(const EventCatalog& catalog,
                                                      const FactorGraph& graph,
                                                      const std::set<std::string>& from,
                                                      const std::set<std::string>& to) {
    std::optional<std::vector<std::string>> best;
    for (const auto& a : from) {
        for (const auto& b : to) {
            auto path = try_shortest_dependency_path(graph, catalog, a, b);
            if (!path) continue;
            if (!best || path->size() < best->size() || (path->size() == best->size() && *path < *best))
                best = std::move(path);
        }
    }
    if (!best) return std::nullopt;
    std::vector<std::string> inter(best->begin() + 1, best->end() - 1);
    std::vector<Configuration> steps;
    std::size_t i = 0;
    while (i < inter.size()) {
        std::set<std::string> group{inter[i]};
        auto config = place_events(catalog, group);
        if (!config) return std::nullopt;
        std::size_t j = i + 1;
        while (j < inter.size()) {
            group.insert(inter[j]);
            auto bigger = place_events(catalog, group);
            if (!bigger) {
                group.erase(inter[j]);
                break;
            }
            config = bigger;
            ++j;
        }
        steps.push_back(*config);
        i = j;
    }
    return steps;
}

std::set<std::string> event_set(const Configuration& config) {
    const auto v = events_of(config);
    return std::set<std::string>(v.begin(), v.end());
}

}  // namespace

std::vector<Configuration> condense_common_steps(const EventCatalog& catalog,
                                                 const FactorGraph& graph,
                                                 const std::set<std::string>& prev_events,
                                                 std::vector<Configuration> steps,
                                                 const std::set<std::string>& next_events) {
    for (std::size_t i = 0; i < steps.size(); ++i) {
        const auto events = event_set(steps[i]);
        if (events.size() < 2) continue;
        std::optional<std::set<std::string>> common;
        for (const auto& e : events) {
            const auto b = graph.markov_blanket(e);
            if (!common) {
                common = b;
            } else {
                std::set<std::string> inter;
                std::set_intersection(common->begin(), common->end(), b.begin(), b.end(),
                                      std::inserter(inter, inter.begin()));
                *common = std::move(inter);
            }
            if (common->empty()) break;
        }
        if (!common || common->empty()) continue;

        const auto& left = i == 0 ? prev_events : event_set(steps[i - 1]);
        const auto& right = i + 1 < steps.size() ? event_set(steps[i + 1]) : next_events;
        for (const auto& star : *common) {
            if (!catalog.has_event(star) || !event_placeable(catalog, star)) continue;
            const std::set<std::string> condensed{star};
            if (!chain_linked(graph, left, condensed) || !chain_linked(graph, condensed, right))
                continue;
            auto config = place_events(catalog, condensed);
            if (!config) continue;
            steps[i] = *config;
            break;
        }
    }
    return steps;
}

std::vector<Configuration> drop_redundant_steps(const FactorGraph& graph,
                                                const std::set<std::string>& prev_events,
                                                std::vector<Configuration> steps,
                                                const std::set<std::string>& next_events) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto& left = i == 0 ? prev_events : event_set(steps[i - 1]);
            const auto cur = event_set(steps[i]);
            if (union_blankets(graph, left) != union_blankets(graph, cur)) continue;
            const auto& right = i + 1 < steps.size() ? event_set(steps[i + 1]) : next_events;
            if (!chain_linked(graph, left, right)) continue;
            steps.erase(steps.begin() + static_cast<std::ptrdiff_t>(i));
            changed = true;
            break;
        }
    }
    return steps;
}

TransformResult transform_schedule(const EventCatalog& catalog, const FactorGraph& graph,
                                   const Schedule& requested) {
    check_schedule(catalog, requested);
    const ChainIndex idx = build_chain_index(catalog, graph);

    TransformResult result;
    result.schedule.slice_duration = requested.slice_duration;
    auto push = [&](const ScheduledSlice& slice, bool inserted) {
        result.schedule.slices.push_back(slice);
        result.inserted.push_back(inserted);
        if (inserted) ++result.n_inserted;
    };

    push(requested.slices[0], false);
    for (std::size_t t = 0; t + 1 < requested.slices.size(); ++t) {
        const ScheduledSlice& next_slice = requested.slices[t + 1];
        if (next_slice.break_before) {
            push(next_slice, false);
            ++result.n_breaks;
            continue;
        }
        const auto from = event_set(requested.slices[t].config);
        const auto to = event_set(next_slice.config);
        if (chain_linked(graph, from, to)) {
            push(next_slice, false);
            continue;
        }

        std::optional<std::vector<Configuration>> steps;
        if (idx.exact) {
            if (auto seq = min_insertion(idx, from, to)) {
                steps.emplace();
                for (const Candidate* c : *seq) steps->push_back(c->config);
            }
        } else {
            steps = greedy_pack(catalog, graph, from, to);
        }

        if (!steps) {
            ScheduledSlice broken = next_slice;
            broken.break_before = true;
            push(broken, false);
            ++result.n_breaks;
            continue;
        }
        *steps = condense_common_steps(catalog, graph, from, *steps, to);
        *steps = drop_redundant_steps(graph, from, *steps, to);
        for (const auto& config : *steps) push(ScheduledSlice{config, false}, true);
        push(next_slice, false);
    }

    // Soundness: every un-broken adjacent pair must overlap.
    for (std::size_t i = 0; i + 1 < result.schedule.slices.size(); ++i) {
        if (result.schedule.slices[i + 1].break_before) continue;
        const auto a = event_set(result.schedule.slices[i].config);
        const auto b = event_set(result.schedule.slices[i + 1].config);
        if (!blankets_overlap(graph, a, b))
            throw InvalidScheduleError("transform produced non-overlapping slices " +
                                       std::to_string(i) + " and " + std::to_string(i + 1));
    }
    return result;
}

}  // namespace bayesperf
