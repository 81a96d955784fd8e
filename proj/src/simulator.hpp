#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "event_model.hpp"
#include "measurement.hpp"
#include "relations.hpp"

namespace bayesperf {

// Piecewise-constant workload: each phase pins per-slice rates for the free
// events; derived events follow from the relations, so truth satisfies every
// factor with residual 0.
struct WorkloadPhase {
    long duration_slices = 0;
    std::map<std::string, double> rates;  // event -> count per time unit
};

struct WorkloadModel {
    std::vector<WorkloadPhase> phases;
};

struct NoiseModel {
    double relative_sigma = 0.0;
    double bias = 0.0;
    double dropout_prob = 0.0;

    void check() const;  // throws SchemaError
};

enum class SamplingMode { kPolling, kMultiplexed };

// threshold is the trigger-event count between interrupts; each interrupt
// reads the live counters, so it controls samples per slice. trigger_event
// must be a fixed event. polling_events lists the programmable events pinned
// in polling mode (fixed events are always read in both modes).
struct SamplingPolicy {
    SamplingMode mode = SamplingMode::kMultiplexed;
    double threshold = 1.0;
    double slice_duration = 1.0;
    std::string trigger_event;
    std::vector<std::string> polling_events;
    std::optional<Schedule> schedule;  // required in multiplexed mode
};

// slice -> event -> true count accumulated over the slice.
using GroundTruth = std::vector<std::map<std::string, double>>;

// Throws UnderdeterminedWorkloadError when the phases stop before the horizon
// ends or the relations leave a catalog event without a value.
GroundTruth generate_ground_truth(const EventCatalog& catalog, const RelationSet& relations,
                                  const WorkloadModel& workload, long horizon,
                                  double slice_duration);

// Draws the noisy trace. Multiplexed mode emits only the scheduled slice's
// events, enabled for a share of the slice so linux_scale is the natural
// corrector; polling mode reads the pinned events over the whole slice.
// Deterministic per seed.
SampleBatch sample_trace(const GroundTruth& truth, const SamplingPolicy& policy,
                         const NoiseModel& noise, const EventCatalog& catalog,
                         std::uint64_t seed);

extern const char* const kTruthCsvHeader;  // slice,event,value

std::string truth_to_csv(const GroundTruth& truth);
GroundTruth truth_from_csv(const std::string& content);
GroundTruth load_truth(const std::string& path);
void save_truth(const GroundTruth& truth, const std::string& path);

struct Scenario {
    EventCatalog catalog;
    RelationSet relations;
    WorkloadModel workload;
    NoiseModel noise;
    SamplingPolicy policy;
    std::uint64_t seed = 0;
    long horizon = 0;
};

// Scenario JSON references catalog/relations/schedule files by path, resolved
// against base_dir when relative.
Scenario scenario_from_json(const nlohmann::json& j, const std::string& base_dir);
Scenario load_scenario(const std::string& path);

struct SimulationResult {
    GroundTruth truth;
    SampleBatch trace;
};

SimulationResult run_scenario(const Scenario& scenario);

}  // namespace bayesperf
