#include "event_model.hpp"

#include <algorithm>

#include "errors.hpp"
#include "io_util.hpp"

namespace bayesperf {

std::string CounterId::str() const {
    return (kind == EventKind::kFixed ? "f" : "c") + std::to_string(index);
}

CounterId CounterId::parse(const std::string& s) {
    if (s.size() < 2 || (s[0] != 'f' && s[0] != 'c'))
        throw ParseError("bad counter id '" + s + "'");
    CounterId id;
    id.kind = s[0] == 'f' ? EventKind::kFixed : EventKind::kProgrammable;
    id.index = static_cast<int>(parse_long(s.substr(1), "counter id"));
    return id;
}

bool EventCatalog::has_event(const std::string& name) const {
    return std::any_of(events.begin(), events.end(),
                       [&](const EventDef& e) { return e.name == name; });
}

const EventDef& EventCatalog::event(const std::string& name) const {
    for (const auto& e : events)
        if (e.name == name) return e;
    throw UnknownEventError(name);
}

bool EventCatalog::is_fixed(const std::string& name) const {
    return event(name).kind == EventKind::kFixed;
}

std::vector<std::string> EventCatalog::fixed_events() const {
    std::vector<std::string> out;
    for (const auto& e : events)
        if (e.kind == EventKind::kFixed) out.push_back(e.name);
    return out;
}

std::vector<std::string> EventCatalog::programmable_events() const {
    std::vector<std::string> out;
    for (const auto& e : events)
        if (e.kind == EventKind::kProgrammable) out.push_back(e.name);
    return out;
}

std::set<int> EventCatalog::placeable_counters(const std::string& name) const {
    if (event(name).kind == EventKind::kFixed) return {};
    std::set<int> result;
    for (int i = 0; i < n_programmable; ++i) result.insert(i);
    for (const auto& c : allowed_counters) {
        if (c.event != name) continue;
        std::set<int> next;
        std::set_intersection(result.begin(), result.end(), c.counters.begin(),
                              c.counters.end(), std::inserter(next, next.begin()));
        result = std::move(next);
    }
    return result;
}

int EventCatalog::capacity() const {
    int cap = n_programmable;
    for (const auto& c : capacity_limits) cap = std::min(cap, c.max_events);
    return cap;
}

std::set<std::string> EventCatalog::exclusions(const std::string& name) const {
    std::set<std::string> out;
    for (const auto& c : mutually_exclusive) {
        if (std::find(c.events.begin(), c.events.end(), name) == c.events.end()) continue;
        for (const auto& e : c.events)
            if (e != name) out.insert(e);
    }
    return out;
}

void EventCatalog::check() const {
    if (n_programmable < 1) throw SchemaError("n_programmable must be >= 1");
    if (n_fixed < 0) throw SchemaError("n_fixed must be >= 0");
    std::set<std::string> seen;
    int fixed_count = 0;
    for (const auto& e : events) {
        if (e.name.empty()) throw SchemaError("event with empty name");
        if (!seen.insert(e.name).second) throw SchemaError("duplicate event " + e.name);
        if (e.kind == EventKind::kFixed) ++fixed_count;
    }
    if (fixed_count > n_fixed)
        throw SchemaError("more fixed events than fixed counters");
    for (const auto& c : allowed_counters) {
        if (!has_event(c.event)) throw UnknownEventError(c.event);
        if (event(c.event).kind == EventKind::kFixed)
            throw SchemaError("allowed_counters constraint on fixed event " + c.event);
        if (c.counters.empty())
            throw SchemaError("empty allowed_counters set for " + c.event);
        for (int idx : c.counters)
            if (idx < 0 || idx >= n_programmable)
                throw SchemaError("allowed_counters index out of range for " + c.event);
    }
    for (const auto& c : mutually_exclusive) {
        if (c.events.size() < 2)
            throw SchemaError("mutually_exclusive constraint needs >= 2 events");
        for (const auto& e : c.events)
            if (!has_event(e)) throw UnknownEventError(e);
    }
    for (const auto& c : capacity_limits)
        if (c.max_events < 1) throw SchemaError("capacity_limit must be >= 1");
}

namespace {

void require_object(const nlohmann::json& j, const std::string& what) {
    if (!j.is_object()) throw SchemaError(what + " must be a JSON object");
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& key, const std::string& what) {
    if (!j.contains(key)) throw SchemaError(what + " missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(what + " field '" + key + "': " + e.what());
    }
}

}  // namespace

EventCatalog catalog_from_json(const nlohmann::json& j) {
    require_object(j, "catalog");
    EventCatalog catalog;
    catalog.n_fixed = get_field<int>(j, "n_fixed", "catalog");
    catalog.n_programmable = get_field<int>(j, "n_programmable", "catalog");
    for (const auto& ej : get_field<nlohmann::json>(j, "events", "catalog")) {
        require_object(ej, "catalog event");
        EventDef def;
        def.name = get_field<std::string>(ej, "name", "catalog event");
        const std::string kind = get_field<std::string>(ej, "kind", "catalog event");
        if (kind == "fixed") {
            def.kind = EventKind::kFixed;
        } else if (kind == "programmable") {
            def.kind = EventKind::kProgrammable;
        } else {
            throw SchemaError("catalog event " + def.name + " has unknown kind '" + kind + "'");
        }
        catalog.events.push_back(std::move(def));
    }
    if (j.contains("constraints")) {
        for (const auto& cj : j.at("constraints")) {
            require_object(cj, "constraint");
            const std::string type = get_field<std::string>(cj, "type", "constraint");
            if (type == "allowed_counters") {
                AllowedCountersConstraint c;
                c.event = get_field<std::string>(cj, "event", "allowed_counters");
                for (int idx : get_field<std::vector<int>>(cj, "counters", "allowed_counters"))
                    c.counters.insert(idx);
                catalog.allowed_counters.push_back(std::move(c));
            } else if (type == "mutually_exclusive") {
                MutuallyExclusiveConstraint c;
                c.events = get_field<std::vector<std::string>>(cj, "events", "mutually_exclusive");
                if (cj.contains("resource"))
                    c.resource = cj.at("resource").get<std::string>();
                catalog.mutually_exclusive.push_back(std::move(c));
            } else if (type == "capacity_limit") {
                CapacityLimitConstraint c;
                c.max_events = get_field<int>(cj, "max_events", "capacity_limit");
                catalog.capacity_limits.push_back(c);
            } else {
                throw SchemaError("unknown constraint type '" + type + "'");
            }
        }
    }
    catalog.check();
    return catalog;
}

EventCatalog load_catalog(const std::string& path) {
    return catalog_from_json(load_json(path));
}

Configuration Configuration::from_assignments(const std::map<int, std::string>& assignments) {
    Configuration config;
    std::set<std::string> used;
    for (const auto& [counter, event] : assignments) {
        if (!used.insert(event).second)
            throw SchemaError("event " + event + " assigned to multiple counters");
        config.assignments_.emplace(counter, event);
    }
    return config;
}

bool Configuration::contains_event(const std::string& event) const {
    return counter_of(event).has_value();
}

std::optional<int> Configuration::counter_of(const std::string& event) const {
    for (const auto& [counter, name] : assignments_)
        if (name == event) return counter;
    return std::nullopt;
}

std::vector<std::string> events_of(const Configuration& config) {
    std::vector<std::string> out;
    for (const auto& [counter, event] : config.assignments()) out.push_back(event);
    std::sort(out.begin(), out.end());
    return out;
}

const char* violation_name(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::kCapacityLimit: return "CapacityLimit";
        case ViolationKind::kCounterRange: return "CounterRange";
        case ViolationKind::kFixedEventInConfiguration: return "FixedEventInConfiguration";
        case ViolationKind::kAllowedCounters: return "AllowedCounters";
        case ViolationKind::kMutuallyExclusive: return "MutuallyExclusive";
    }
    return "?";
}

namespace {

ValidityReport violation(ViolationKind kind, const std::string& event,
                         const std::string& detail) {
    ValidityReport r;
    r.ok = false;
    r.kind = kind;
    r.event = event;
    r.detail = detail;
    return r;
}

}  // namespace

ValidityReport validate_configuration(const EventCatalog& catalog, const Configuration& config) {
    // Unknown events are an error, not a report.
    for (const auto& [counter, event] : config.assignments()) catalog.event(event);

    const int cap = catalog.capacity();
    if (static_cast<int>(config.size()) > cap)
        return violation(ViolationKind::kCapacityLimit, "",
                         std::to_string(config.size()) + " events assigned, capacity is " +
                             std::to_string(cap));

    // Most-constrained first: fewest placeable counters, then most exclusion
    // partners, then name.
    std::vector<std::string> order = events_of(config);
    std::stable_sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        const auto pa = catalog.placeable_counters(a).size();
        const auto pb = catalog.placeable_counters(b).size();
        if (pa != pb) return pa < pb;
        const auto xa = catalog.exclusions(a).size();
        const auto xb = catalog.exclusions(b).size();
        if (xa != xb) return xa > xb;
        return a < b;
    });

    for (const auto& event : order) {
        const int counter = *config.counter_of(event);
        if (catalog.event(event).kind == EventKind::kFixed)
            return violation(ViolationKind::kFixedEventInConfiguration, event,
                             event + " is a fixed event and cannot be scheduled");
        if (counter < 0 || counter >= catalog.n_programmable)
            return violation(ViolationKind::kCounterRange, event,
                             "counter " + std::to_string(counter) + " out of range for " + event);
        const auto allowed = catalog.placeable_counters(event);
        if (!allowed.count(counter))
            return violation(ViolationKind::kAllowedCounters, event,
                             event + " may not be placed on counter " + std::to_string(counter));
        for (const auto& other : catalog.exclusions(event)) {
            if (config.contains_event(other))
                return violation(ViolationKind::kMutuallyExclusive, event,
                                 event + " and " + other + " are mutually exclusive");
        }
    }
    return ValidityReport::valid();
}

Schedule schedule_from_json(const nlohmann::json& j) {
    require_object(j, "schedule");
    Schedule schedule;
    if (j.contains("slice_duration")) {
        schedule.slice_duration = j.at("slice_duration").get<double>();
        if (!(schedule.slice_duration > 0)) throw SchemaError("slice_duration must be > 0");
    }
    for (const auto& sj : get_field<nlohmann::json>(j, "slices", "schedule")) {
        require_object(sj, "slice");
        ScheduledSlice slice;
        std::map<int, std::string> assignments;
        const nlohmann::json aj = get_field<nlohmann::json>(sj, "assignments", "slice");
        for (const auto& [key, value] : aj.items()) {
            const CounterId id = CounterId::parse(key);
            if (id.kind != EventKind::kProgrammable)
                throw SchemaError("schedule assigns fixed counter " + key);
            assignments[id.index] = value.get<std::string>();
        }
        slice.config = Configuration::from_assignments(assignments);
        if (sj.contains("break_before")) slice.break_before = sj.at("break_before").get<bool>();
        schedule.slices.push_back(std::move(slice));
    }
    return schedule;
}

nlohmann::json schedule_to_json(const Schedule& schedule) {
    nlohmann::json j;
    j["slice_duration"] = schedule.slice_duration;
    j["slices"] = nlohmann::json::array();
    for (const auto& slice : schedule.slices) {
        nlohmann::json sj;
        sj["assignments"] = nlohmann::json::object();
        for (const auto& [counter, event] : slice.config.assignments())
            sj["assignments"][CounterId{EventKind::kProgrammable, counter}.str()] = event;
        sj["break_before"] = slice.break_before;
        j["slices"].push_back(std::move(sj));
    }
    return j;
}

Schedule load_schedule(const std::string& path) {
    return schedule_from_json(load_json(path));
}

void save_schedule(const Schedule& schedule, const std::string& path) {
    write_file(path, schedule_to_json(schedule).dump(2) + "\n");
}

void check_schedule(const EventCatalog& catalog, const Schedule& schedule) {
    if (schedule.slices.empty()) throw InvalidScheduleError("schedule is empty");
    for (std::size_t i = 0; i < schedule.slices.size(); ++i) {
        const ValidityReport report = validate_configuration(catalog, schedule.slices[i].config);
        if (!report.ok)
            throw InvalidScheduleError("slice " + std::to_string(i) + ": " +
                                       violation_name(report.kind) +
                                       (report.detail.empty() ? "" : " (" + report.detail + ")"));
    }
}

std::set<std::string> schedule_event_set(const Schedule& schedule) {
    std::set<std::string> out;
    for (const auto& slice : schedule.slices)
        for (const auto& [counter, event] : slice.config.assignments()) out.insert(event);
    return out;
}

}  // namespace bayesperf
