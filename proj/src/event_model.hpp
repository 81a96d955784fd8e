#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace bayesperf {

enum class EventKind { kFixed, kProgrammable };

struct EventDef {
    std::string name;
    EventKind kind = EventKind::kProgrammable;
};

// Identifies a hardware counter: fixed counters are "f<i>", programmable
// counters are "c<i>".
struct CounterId {
    EventKind kind = EventKind::kProgrammable;
    int index = 0;

    std::string str() const;
    static CounterId parse(const std::string& s);

    bool operator==(const CounterId& other) const {
        return kind == other.kind && index == other.index;
    }
};

struct AllowedCountersConstraint {
    std::string event;
    std::set<int> counters;  // programmable counter indices
};

struct MutuallyExclusiveConstraint {
    std::vector<std::string> events;
    std::string resource;
};

struct CapacityLimitConstraint {
    int max_events = 0;
};

struct EventCatalog {
    std::vector<EventDef> events;
    int n_fixed = 0;
    int n_programmable = 0;
    std::vector<AllowedCountersConstraint> allowed_counters;
    std::vector<MutuallyExclusiveConstraint> mutually_exclusive;
    std::vector<CapacityLimitConstraint> capacity_limits;

    bool has_event(const std::string& name) const;
    const EventDef& event(const std::string& name) const;  // throws UnknownEventError
    bool is_fixed(const std::string& name) const;

    std::vector<std::string> fixed_events() const;
    std::vector<std::string> programmable_events() const;

    // Programmable counter indices the event may be placed on (intersection of
    // its allowed_counters constraints; all counters when unconstrained).
    std::set<int> placeable_counters(const std::string& event) const;

    // Effective cap on simultaneous programmable events.
    int capacity() const;

    // Events mutually exclusive with the given one.
    std::set<std::string> exclusions(const std::string& event) const;

    // Checked on load: unique names, kind counts vs n_fixed/n_programmable,
    // constraints referencing known events, counter indices in range.
    void check() const;
};

EventCatalog catalog_from_json(const nlohmann::json& j);
EventCatalog load_catalog(const std::string& path);

// One slice's assignment of programmable counters to events. Injective on
// both sides by construction.
class Configuration {
public:
    Configuration() = default;

    // Throws SchemaError on duplicate counters or duplicate events.
    static Configuration from_assignments(const std::map<int, std::string>& assignments);

    const std::map<int, std::string>& assignments() const { return assignments_; }
    bool contains_event(const std::string& event) const;
    std::optional<int> counter_of(const std::string& event) const;
    std::size_t size() const { return assignments_.size(); }
    bool empty() const { return assignments_.empty(); }

    bool operator==(const Configuration& other) const {
        return assignments_ == other.assignments_;
    }

private:
    std::map<int, std::string> assignments_;
};

// Events measured by a configuration, sorted by name.
std::vector<std::string> events_of(const Configuration& config);

enum class ViolationKind {
    kCapacityLimit,
    kCounterRange,
    kFixedEventInConfiguration,
    kAllowedCounters,
    kMutuallyExclusive,
};

const char* violation_name(ViolationKind kind);

struct ValidityReport {
    bool ok = true;
    ViolationKind kind = ViolationKind::kCapacityLimit;
    std::string event;   // offending event, empty for configuration-level violations
    std::string detail;  // human-readable description

    static ValidityReport valid() { return ValidityReport{}; }
};

// Checks a configuration against the catalog and reports the first violated
// constraint. Events are visited most-constrained first (fewest placeable
// counters, then most exclusion ties, then name); configuration-level
// capacity is checked before per-event constraints. Throws UnknownEventError
// for events absent from the catalog.
ValidityReport validate_configuration(const EventCatalog& catalog, const Configuration& config);

struct ScheduledSlice {
    Configuration config;
    // True when the inference chain must restart at this slice (no dependency
    // link to the previous slice could be established).
    bool break_before = false;
};

struct Schedule {
    std::vector<ScheduledSlice> slices;
    double slice_duration = 1.0;

    std::size_t size() const { return slices.size(); }
};

Schedule schedule_from_json(const nlohmann::json& j);
nlohmann::json schedule_to_json(const Schedule& schedule);
Schedule load_schedule(const std::string& path);
void save_schedule(const Schedule& schedule, const std::string& path);

// Validates every slice; throws InvalidScheduleError (with slice index and
// violation text) if any slice fails, or if the schedule is empty.
void check_schedule(const EventCatalog& catalog, const Schedule& schedule);

// Distinct programmable events appearing anywhere in the schedule.
std::set<std::string> schedule_event_set(const Schedule& schedule);

}  // namespace bayesperf
