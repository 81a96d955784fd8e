#include "simulator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "errors.hpp"
#include "io_util.hpp"
#include "log.hpp"
#include "rng.hpp"
#include "scheduler.hpp"

namespace bayesperf {

void NoiseModel::check() const {
    if (relative_sigma < 0) throw SchemaError("noise relative_sigma must be >= 0");
    if (dropout_prob < 0 || dropout_prob >= 1)
        throw SchemaError("noise dropout_prob must be in [0, 1)");
    if (!std::isfinite(bias)) throw SchemaError("noise bias must be finite");
}

GroundTruth generate_ground_truth(const EventCatalog& catalog, const RelationSet& relations,
                                  const WorkloadModel& workload, long horizon,
                                  double slice_duration) {
    if (horizon < 0) throw SchemaError("horizon must be >= 0");
    if (slice_duration <= 0) throw SchemaError("slice_duration must be > 0");
    GroundTruth truth;
    if (horizon == 0) return truth;

    long covered = 0;
    for (const auto& phase : workload.phases) covered += phase.duration_slices;
    if (covered < horizon)
        throw UnderdeterminedWorkloadError("phases cover " + std::to_string(covered) +
                                           " slices, horizon is " + std::to_string(horizon));

    truth.reserve(static_cast<std::size_t>(horizon));
    long produced = 0;
    for (const auto& phase : workload.phases) {
        if (produced >= horizon) break;
        std::map<std::string, double> values;
        for (const auto& [event, rate] : phase.rates) {
            if (!catalog.has_event(event)) throw UnknownEventError(event);
            if (rate < 0) throw SchemaError("negative rate for event " + event);
            values[event] = rate * slice_duration;
        }
        values = close_over_relations(relations, std::move(values));
        for (const auto& def : catalog.events)
            if (!values.count(def.name))
                throw UnderdeterminedWorkloadError("event " + def.name +
                                                   " has no rate and no resolving relation");
        for (long s = 0; s < phase.duration_slices && produced < horizon; ++s, ++produced)
            truth.push_back(values);
    }
    return truth;
}

namespace {

std::uint64_t name_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

CounterId fixed_counter(const EventCatalog& catalog, const std::string& event) {
    int index = 0;
    for (const auto& def : catalog.events) {
        if (def.kind != EventKind::kFixed) continue;
        if (def.name == event) return CounterId{EventKind::kFixed, index};
        ++index;
    }
    throw UnknownEventError(event);
}

double truth_of(const std::map<std::string, double>& values, const std::string& event) {
    const auto it = values.find(event);
    if (it == values.end()) throw UnknownEventError(event);
    return it->second;
}

// Emits n_samples readings for one (slice, event): the count accrued while
// enabled, split across the interrupts, each carrying independent noise.
void emit_samples(SampleBatch& batch, const NoiseModel& noise, Rng& rng, long slice,
                  const std::string& event, CounterId counter, double true_value, double share,
                  long n_samples, double duration) {
    for (long i = 0; i < n_samples; ++i) {
        const double eps = noise.relative_sigma > 0 ? rng.normal(0.0, noise.relative_sigma) : 0.0;
        const double drop = rng.uniform();
        if (drop < noise.dropout_prob) continue;
        Sample s;
        s.slice = slice;
        s.event = event;
        s.counter = counter;
        s.t_enabled = share * duration / static_cast<double>(n_samples);
        s.t_running = duration;
        s.value = true_value * (share / static_cast<double>(n_samples)) * (1.0 + eps + noise.bias);
        batch.add(std::move(s));
    }
}

}  // namespace

SampleBatch sample_trace(const GroundTruth& truth, const SamplingPolicy& policy,
                         const NoiseModel& noise, const EventCatalog& catalog,
                         std::uint64_t seed) {
    noise.check();
    if (policy.threshold <= 0) throw SchemaError("policy threshold must be > 0");

    const auto fixed = catalog.fixed_events();
    std::string trigger = policy.trigger_event;
    if (trigger.empty() && !fixed.empty()) trigger = fixed.front();
    if (!trigger.empty() && (!catalog.has_event(trigger) || !catalog.is_fixed(trigger)))
        throw SchemaError("trigger event must be a fixed event: " + trigger);

    SampleBatch batch;
    if (policy.mode == SamplingMode::kPolling) {
        if (policy.slice_duration <= 0) throw SchemaError("slice_duration must be > 0");
        if (static_cast<int>(policy.polling_events.size()) > catalog.capacity())
            throw InvalidScheduleError("polling set exceeds counter capacity");
        std::set<std::string> polled(policy.polling_events.begin(), policy.polling_events.end());
        auto config = place_events(catalog, polled);
        if (!config && !polled.empty())
            throw InvalidScheduleError("polling events have no valid counter placement");

        for (std::size_t t = 0; t < truth.size(); ++t) {
            const long slice = static_cast<long>(t);
            auto read = [&](const std::string& event, CounterId counter) {
                Rng rng(mix_seed(seed, static_cast<std::uint64_t>(slice), name_hash(event), 1));
                emit_samples(batch, noise, rng, slice, event, counter,
                             truth_of(truth[t], event), 1.0, 1, policy.slice_duration);
            };
            for (const auto& event : fixed) read(event, fixed_counter(catalog, event));
            if (config)
                for (const auto& [counter, event] : config->assignments())
                    read(event, CounterId{EventKind::kProgrammable, counter});
        }
        return batch;
    }

    if (!policy.schedule) throw InvalidScheduleError("multiplexed mode requires a schedule");
    const Schedule& schedule = *policy.schedule;
    check_schedule(catalog, schedule);
    if (truth.size() > schedule.slices.size())
        throw InvalidScheduleError("schedule has fewer slices than the horizon");
    const double duration = schedule.slice_duration;

    // The kernel rotates the distinct counter groups within each slice, so a
    // programmable event is enabled for 1/n_groups of its slice.
    std::set<std::vector<std::string>> groups;
    for (const auto& slice : schedule.slices)
        if (!slice.config.empty()) groups.insert(events_of(slice.config));
    const double share = groups.empty() ? 1.0 : 1.0 / static_cast<double>(groups.size());

    for (std::size_t t = 0; t < truth.size(); ++t) {
        const long slice = static_cast<long>(t);
        long interrupts = 1;
        if (!trigger.empty()) {
            const double per_slice = truth_of(truth[t], trigger);
            interrupts = std::max<long>(1, static_cast<long>(per_slice / policy.threshold));
        }
        for (const auto& event : fixed) {
            Rng rng(mix_seed(seed, static_cast<std::uint64_t>(slice), name_hash(event), 2));
            emit_samples(batch, noise, rng, slice, event, fixed_counter(catalog, event),
                         truth_of(truth[t], event), 1.0, 1, duration);
        }
        for (const auto& [counter, event] : schedule.slices[t].config.assignments()) {
            const long n = std::max<long>(1, static_cast<long>(
                                                 static_cast<double>(interrupts) * share));
            Rng rng(mix_seed(seed, static_cast<std::uint64_t>(slice), name_hash(event), 2));
            emit_samples(batch, noise, rng, slice, event,
                         CounterId{EventKind::kProgrammable, counter}, truth_of(truth[t], event),
                         share, n, duration);
        }
    }
    return batch;
}

const char* const kTruthCsvHeader = "slice,event,value";

std::string truth_to_csv(const GroundTruth& truth) {
    std::ostringstream out;
    out << kTruthCsvHeader << "\n";
    for (std::size_t t = 0; t < truth.size(); ++t)
        for (const auto& [event, value] : truth[t])
            out << t << "," << event << "," << format_double(value) << "\n";
    return out.str();
}

GroundTruth truth_from_csv(const std::string& content) {
    const auto lines = split_lines(content);
    if (lines.empty() || lines[0] != kTruthCsvHeader)
        throw ParseError("truth csv must start with header '" + std::string(kTruthCsvHeader) +
                         "'");
    GroundTruth truth;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != 3)
            throw ParseError("truth csv line " + std::to_string(i + 1) + ": expected 3 fields");
        const long slice = parse_long(fields[0]);
        if (slice < 0) throw ParseError("truth csv line " + std::to_string(i + 1) +
                                        ": negative slice");
        if (static_cast<std::size_t>(slice) >= truth.size())
            truth.resize(static_cast<std::size_t>(slice) + 1);
        truth[static_cast<std::size_t>(slice)][fields[1]] = parse_double(fields[2]);
    }
    return truth;
}

GroundTruth load_truth(const std::string& path) { return truth_from_csv(read_file(path)); }

void save_truth(const GroundTruth& truth, const std::string& path) {
    write_file(path, truth_to_csv(truth));
}

namespace {

std::string resolve_path(const std::string& path, const std::string& base_dir) {
    if (path.empty() || path.front() == '/' || base_dir.empty()) return path;
    return base_dir + "/" + path;
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir) {
    if (!j.is_object()) throw SchemaError("scenario must be a JSON object");
    Scenario sc;
    if (!j.contains("catalog") || !j["catalog"].is_string())
        throw SchemaError("scenario requires a catalog path");
    sc.catalog = load_catalog(resolve_path(j["catalog"].get<std::string>(), base_dir));
    if (j.contains("relations"))
        sc.relations = load_relations(resolve_path(j["relations"].get<std::string>(), base_dir));

    sc.seed = j.value("seed", 0ULL);
    if (!j.contains("horizon") || !j["horizon"].is_number_integer())
        throw SchemaError("scenario requires an integer horizon");
    sc.horizon = j["horizon"].get<long>();
    if (sc.horizon < 0) throw SchemaError("horizon must be >= 0");

    if (!j.contains("workload") || !j["workload"].is_object() ||
        !j["workload"].contains("phases") || !j["workload"]["phases"].is_array())
        throw SchemaError("scenario requires workload.phases");
    for (const auto& jp : j["workload"]["phases"]) {
        WorkloadPhase phase;
        if (!jp.contains("duration_slices") || !jp["duration_slices"].is_number_integer())
            throw SchemaError("phase requires integer duration_slices");
        phase.duration_slices = jp["duration_slices"].get<long>();
        if (phase.duration_slices < 0) throw SchemaError("phase duration_slices must be >= 0");
        if (jp.contains("rates")) {
            if (!jp["rates"].is_object()) throw SchemaError("phase rates must be an object");
            for (const auto& [event, rate] : jp["rates"].items()) {
                if (!rate.is_number()) throw SchemaError("rate for " + event + " must be a number");
                phase.rates[event] = rate.get<double>();
            }
        }
        sc.workload.phases.push_back(std::move(phase));
    }

    if (j.contains("noise")) {
        const auto& jn = j["noise"];
        if (!jn.is_object()) throw SchemaError("noise must be an object");
        sc.noise.relative_sigma = jn.value("relative_sigma", 0.0);
        sc.noise.bias = jn.value("bias", 0.0);
        sc.noise.dropout_prob = jn.value("dropout_prob", 0.0);
    }
    sc.noise.check();

    if (!j.contains("policy") || !j["policy"].is_object())
        throw SchemaError("scenario requires a policy object");
    const auto& jp = j["policy"];
    const std::string mode = jp.value("mode", std::string("multiplexed"));
    if (mode == "polling") {
        sc.policy.mode = SamplingMode::kPolling;
    } else if (mode == "multiplexed") {
        sc.policy.mode = SamplingMode::kMultiplexed;
    } else {
        throw SchemaError("policy mode must be 'polling' or 'multiplexed'");
    }
    sc.policy.threshold = jp.value("threshold", 1.0);
    if (sc.policy.threshold <= 0) throw SchemaError("policy threshold must be > 0");
    sc.policy.trigger_event = jp.value("trigger", std::string());
    if (jp.contains("polling_events")) {
        if (!jp["polling_events"].is_array())
            throw SchemaError("policy polling_events must be an array");
        for (const auto& e : jp["polling_events"])
            sc.policy.polling_events.push_back(e.get<std::string>());
    }

    if (sc.policy.mode == SamplingMode::kMultiplexed) {
        if (!j.contains("schedule") || !j["schedule"].is_string())
            throw SchemaError("multiplexed scenario requires a schedule path");
        sc.policy.schedule = load_schedule(resolve_path(j["schedule"].get<std::string>(), base_dir));
        sc.policy.slice_duration = sc.policy.schedule->slice_duration;
    } else {
        if (!jp.contains("slice_duration") || !jp["slice_duration"].is_number())
            throw SchemaError("polling policy requires slice_duration");
        sc.policy.slice_duration = jp["slice_duration"].get<double>();
        if (sc.policy.slice_duration <= 0) throw SchemaError("slice_duration must be > 0");
    }
    return sc;
}

Scenario load_scenario(const std::string& path) {
    const auto slash = path.find_last_of('/');
    const std::string base_dir = slash == std::string::npos ? "." : path.substr(0, slash);
    return scenario_from_json(load_json(path), base_dir);
}

SimulationResult run_scenario(const Scenario& scenario) {
    SimulationResult result;
    result.truth = generate_ground_truth(scenario.catalog, scenario.relations, scenario.workload,
                                         scenario.horizon, scenario.policy.slice_duration);
    result.trace = sample_trace(result.truth, scenario.policy, scenario.noise, scenario.catalog,
                                scenario.seed);
    return result;
}

}  // namespace bayesperf
