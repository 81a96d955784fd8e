#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "errors.hpp"
#include "measurement.hpp"
#include "simulator.hpp"
#include "test_util.hpp"

using namespace bayesperf;

namespace {

EventCatalog sim_catalog() {
    return testutil::make_catalog({"A", "B"}, 1, {"CLK"});
}

WorkloadModel one_phase(long slices, std::map<std::string, double> rates) {
    WorkloadModel w;
    w.phases.push_back({slices, std::move(rates)});
    return w;
}

}  // namespace

TEST_CASE("ground truth follows phases and relation closure") {
    const auto catalog = testutil::make_catalog({"A", "B"}, 2);
    RelationSet rel;
    rel.factors.push_back(testutil::make_factor("r", "B", "(mul 2 A)"));

    WorkloadModel w;
    w.phases.push_back({2, {{"A", 10.0}}});
    w.phases.push_back({5, {{"A", 20.0}}});
    const auto truth = generate_ground_truth(catalog, rel, w, 3, 0.5);
    REQUIRE(truth.size() == 3);
    CHECK(truth[0].at("A") == doctest::Approx(5.0));   // rate * slice_duration
    CHECK(truth[0].at("B") == doctest::Approx(10.0));  // closed over the relation
    CHECK(truth[1].at("A") == doctest::Approx(5.0));
    CHECK(truth[2].at("A") == doctest::Approx(10.0));
    CHECK(truth[2].at("B") == doctest::Approx(20.0));

    CHECK(generate_ground_truth(catalog, rel, w, 0, 1.0).empty());
}

TEST_CASE("ground truth rejects underdetermined workloads") {
    const auto catalog = testutil::make_catalog({"A", "B"}, 2);
    CHECK_THROWS_AS(
        generate_ground_truth(catalog, {}, one_phase(2, {{"A", 1.0}, {"B", 1.0}}), 5, 1.0),
        UnderdeterminedWorkloadError);
    CHECK_THROWS_AS(generate_ground_truth(catalog, {}, one_phase(3, {{"A", 1.0}}), 3, 1.0),
                    UnderdeterminedWorkloadError);
    CHECK_THROWS_AS(
        generate_ground_truth(catalog, {}, one_phase(3, {{"A", 1.0}, {"Z", 1.0}}), 3, 1.0),
        UnknownEventError);
    CHECK_THROWS_AS(
        generate_ground_truth(catalog, {}, one_phase(3, {{"A", -1.0}, {"B", 1.0}}), 3, 1.0),
        SchemaError);
}

TEST_CASE("multiplexed sampling shares the slice across counter groups") {
    const auto catalog = sim_catalog();
    const auto schedule = testutil::make_schedule({{"A"}, {"B"}}, catalog, 2.0);
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(2, {{"CLK", 1000.0}, {"A", 30.0}, {"B", 7.0}}), 2, 2.0);

    SamplingPolicy policy;
    policy.schedule = schedule;
    policy.threshold = 100.0;  // 2000 CLK per slice -> 20 interrupts
    const auto batch = sample_trace(truth, policy, {}, catalog, 99);

    // Two groups ({A} and {B}) -> share 0.5 -> 10 samples per scheduled event.
    REQUIRE(batch.indices(0, "A") != nullptr);
    CHECK(batch.indices(0, "A")->size() == 10);
    CHECK(batch.indices(1, "B")->size() == 10);
    CHECK(batch.indices(0, "B") == nullptr);
    CHECK(batch.indices(0, "CLK")->size() == 1);
    CHECK(batch.indices(1, "CLK")->size() == 1);
    CHECK(batch.samples.size() == 22);

    for (const auto& s : batch.samples) {
        if (s.event == "CLK") {
            CHECK(s.t_enabled == doctest::Approx(2.0));
            CHECK(s.t_running == doctest::Approx(2.0));
            CHECK(s.value == doctest::Approx(2000.0));
            CHECK(s.counter.str() == "f0");
        } else {
            CHECK(s.t_enabled == doctest::Approx(0.5 * 2.0 / 10.0));
            CHECK(s.t_running == doctest::Approx(2.0));
            CHECK(s.counter.str() == "c0");
            // Zero noise: every sample scales back to the exact truth.
            CHECK(linux_scale(s) == doctest::Approx(truth[s.slice].at(s.event)));
        }
    }
}

TEST_CASE("interrupt count floors at one sample") {
    const auto catalog = sim_catalog();
    const auto schedule = testutil::make_schedule({{"A"}, {"B"}}, catalog, 1.0);
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(1, {{"CLK", 150.0}, {"A", 1.0}, {"B", 1.0}}), 1, 1.0);
    SamplingPolicy policy;
    policy.schedule = schedule;
    policy.threshold = 100.0;  // 1.5 interrupts -> 1; 1 * 0.5 share -> still 1 sample
    const auto batch = sample_trace(truth, policy, {}, catalog, 1);
    CHECK(batch.indices(0, "A")->size() == 1);
    CHECK(linux_scale(batch.samples[batch.indices(0, "A")->front()]) == doctest::Approx(1.0));
}

TEST_CASE("sampling without fixed events defaults to one interrupt") {
    const auto catalog = testutil::make_catalog({"A"}, 1);
    const auto schedule = testutil::make_schedule({{"A"}}, catalog, 1.0);
    const auto truth = generate_ground_truth(catalog, {}, one_phase(1, {{"A", 4.0}}), 1, 1.0);
    const auto batch = sample_trace(truth, {.schedule = schedule}, {}, catalog, 5);
    REQUIRE(batch.samples.size() == 1);
    CHECK(linux_scale(batch.samples[0]) == doctest::Approx(4.0));
}

TEST_CASE("trigger must be a fixed event") {
    const auto catalog = sim_catalog();
    const auto schedule = testutil::make_schedule({{"A"}, {"B"}}, catalog, 1.0);
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(2, {{"CLK", 10.0}, {"A", 1.0}, {"B", 1.0}}), 2, 1.0);
    SamplingPolicy policy;
    policy.schedule = schedule;
    policy.trigger_event = "A";
    CHECK_THROWS_AS(sample_trace(truth, policy, {}, catalog, 0), SchemaError);
    policy.trigger_event = "NOPE";
    CHECK_THROWS_AS(sample_trace(truth, policy, {}, catalog, 0), SchemaError);
}

TEST_CASE("schedule must cover the horizon") {
    const auto catalog = sim_catalog();
    const auto schedule = testutil::make_schedule({{"A"}}, catalog, 1.0);
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(2, {{"CLK", 10.0}, {"A", 1.0}, {"B", 1.0}}), 2, 1.0);
    CHECK_THROWS_AS(sample_trace(truth, {.schedule = schedule}, {}, catalog, 0),
                    InvalidScheduleError);
}

TEST_CASE("noise shifts values and dropout removes samples") {
    const auto catalog = sim_catalog();
    const auto schedule = testutil::make_schedule({{"A"}, {"B"}}, catalog, 1.0);
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(2, {{"CLK", 4000.0}, {"A", 100.0}, {"B", 50.0}}), 2, 1.0);
    SamplingPolicy policy;
    policy.schedule = schedule;
    policy.threshold = 100.0;  // 40 interrupts -> 20 samples per event

    SUBCASE("pure bias is exact") {
        NoiseModel noise;
        noise.bias = 0.1;
        const auto batch = sample_trace(truth, policy, noise, catalog, 3);
        for (const auto idx : *batch.indices(0, "A"))
            CHECK(linux_scale(batch.samples[idx]) == doctest::Approx(110.0));
    }
    SUBCASE("relative noise spreads around the truth") {
        NoiseModel noise;
        noise.relative_sigma = 0.2;
        const auto batch = sample_trace(truth, policy, noise, catalog, 3);
        double lo = 1e300, hi = -1e300, sum = 0.0;
        const auto& idx = *batch.indices(0, "A");
        for (const auto i : idx) {
            const double v = linux_scale(batch.samples[i]);
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            sum += v;
        }
        CHECK(lo < 100.0);
        CHECK(hi > 100.0);
        CHECK(sum / static_cast<double>(idx.size()) == doctest::Approx(100.0).epsilon(0.2));
    }
    SUBCASE("dropout loses roughly the configured share") {
        NoiseModel noise;
        noise.dropout_prob = 0.5;
        const auto batch = sample_trace(truth, policy, noise, catalog, 3);
        const auto* idx = batch.indices(0, "A");
        const std::size_t kept = idx ? idx->size() : 0;
        CHECK(kept < 20);
        CHECK(kept > 2);
    }
    SUBCASE("invalid noise configs are rejected") {
        NoiseModel bad;
        bad.relative_sigma = -1.0;
        CHECK_THROWS_AS(sample_trace(truth, policy, bad, catalog, 0), SchemaError);
        bad = {};
        bad.dropout_prob = 1.0;
        CHECK_THROWS_AS(sample_trace(truth, policy, bad, catalog, 0), SchemaError);
    }
}

TEST_CASE("same seed reproduces the trace byte for byte") {
    const auto catalog = sim_catalog();
    const auto schedule = testutil::make_schedule({{"A", }, {"B"}}, catalog, 1.0);
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(2, {{"CLK", 900.0}, {"A", 10.0}, {"B", 20.0}}), 2, 1.0);
    SamplingPolicy policy;
    policy.schedule = schedule;
    policy.threshold = 30.0;
    NoiseModel noise;
    noise.relative_sigma = 0.3;
    noise.dropout_prob = 0.1;
    const auto a = sample_trace(truth, policy, noise, catalog, 42);
    const auto b = sample_trace(truth, policy, noise, catalog, 42);
    const auto c = sample_trace(truth, policy, noise, catalog, 43);
    CHECK(trace_to_csv(a) == trace_to_csv(b));
    CHECK(trace_to_csv(a) != trace_to_csv(c));
}

TEST_CASE("polling reads pinned events over the whole slice") {
    const auto catalog = sim_catalog();
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(2, {{"CLK", 100.0}, {"A", 10.0}, {"B", 20.0}}), 2, 0.5);
    SamplingPolicy policy;
    policy.mode = SamplingMode::kPolling;
    policy.slice_duration = 0.5;
    policy.polling_events = {"A"};
    NoiseModel noise;
    noise.bias = -0.5;
    const auto batch = sample_trace(truth, policy, noise, catalog, 17);

    CHECK(batch.indices(0, "B") == nullptr);
    REQUIRE(batch.indices(1, "A") != nullptr);
    REQUIRE(batch.indices(1, "A")->size() == 1);
    const auto& s = batch.samples[batch.indices(1, "A")->front()];
    CHECK(s.t_enabled == doctest::Approx(0.5));
    CHECK(s.t_running == doctest::Approx(0.5));
    CHECK(s.value == doctest::Approx(5.0 * 0.5));  // truth 5 with bias -0.5
    CHECK(batch.indices(0, "CLK")->size() == 1);
}

TEST_CASE("polling rejects oversized or unplaceable pinned sets") {
    auto catalog = sim_catalog();  // one programmable counter
    const auto truth = generate_ground_truth(
        catalog, {}, one_phase(1, {{"CLK", 1.0}, {"A", 1.0}, {"B", 1.0}}), 1, 1.0);
    SamplingPolicy policy;
    policy.mode = SamplingMode::kPolling;
    policy.slice_duration = 1.0;
    policy.polling_events = {"A", "B"};
    CHECK_THROWS_AS(sample_trace(truth, policy, {}, catalog, 0), InvalidScheduleError);
}

TEST_CASE("truth csv round trips") {
    GroundTruth truth(2);
    truth[0]["A"] = 1.5;
    truth[0]["B"] = 2.0;
    truth[1]["A"] = 0.25;
    const std::string csv = truth_to_csv(truth);
    CHECK(csv.rfind("slice,event,value\n", 0) == 0);
    const auto back = truth_from_csv(csv);
    REQUIRE(back.size() == 2);
    CHECK(back[0].at("B") == doctest::Approx(2.0));
    CHECK(truth_to_csv(back) == csv);

    testutil::TempDir tmp;
    save_truth(truth, tmp.file("truth.csv"));
    CHECK(truth_to_csv(load_truth(tmp.file("truth.csv"))) == csv);

    CHECK_THROWS_AS(truth_from_csv("bogus\n"), ParseError);
    CHECK_THROWS_AS(truth_from_csv("slice,event,value\n0,A\n"), ParseError);
}

TEST_CASE("scenario files load with relative paths") {
    testutil::TempDir tmp;
    testutil::write_text(tmp.file("catalog.json"), R"({
        "n_fixed": 1, "n_programmable": 1,
        "events": [
            {"name": "CLK", "kind": "fixed"},
            {"name": "A", "kind": "programmable"},
            {"name": "B", "kind": "programmable"}
        ]
    })");
    testutil::write_text(tmp.file("relations.json"), R"json({
        "factors": [{"id": "r", "lhs": "B", "rhs": "(mul 2 A)"}]
    })json");
    testutil::write_text(tmp.file("schedule.json"), R"({
        "slice_duration": 1.0,
        "slices": [
            {"assignments": {"c0": "A"}},
            {"assignments": {"c0": "B"}}
        ]
    })");
    testutil::write_text(tmp.file("scenario.json"), R"({
        "catalog": "catalog.json",
        "relations": "relations.json",
        "schedule": "schedule.json",
        "seed": 7,
        "horizon": 2,
        "workload": {"phases": [
            {"duration_slices": 2, "rates": {"CLK": 500.0, "A": 12.0}}
        ]},
        "noise": {"relative_sigma": 0.1},
        "policy": {"threshold": 50.0}
    })");

    const auto scenario = load_scenario(tmp.file("scenario.json"));
    CHECK(scenario.seed == 7);
    CHECK(scenario.horizon == 2);
    CHECK(scenario.policy.mode == SamplingMode::kMultiplexed);
    CHECK(scenario.policy.slice_duration == 1.0);
    REQUIRE(scenario.policy.schedule.has_value());

    const auto result = run_scenario(scenario);
    CHECK(result.truth.size() == 2);
    CHECK(result.truth[0].at("B") == doctest::Approx(24.0));
    CHECK_FALSE(result.trace.empty());

    // Same scenario run twice is identical.
    const auto rerun = run_scenario(scenario);
    CHECK(trace_to_csv(result.trace) == trace_to_csv(rerun.trace));
    CHECK(truth_to_csv(result.truth) == truth_to_csv(rerun.truth));
}

TEST_CASE("scenario schema errors") {
    const auto base = nlohmann::json::parse(R"({
        "catalog": "catalog.json",
        "horizon": 1,
        "workload": {"phases": [{"duration_slices": 1}]},
        "policy": {}
    })");

    auto no_catalog = base;
    no_catalog.erase("catalog");
    CHECK_THROWS_AS(scenario_from_json(no_catalog, ""), SchemaError);

    testutil::TempDir tmp;
    testutil::write_text(tmp.file("catalog.json"), R"({
        "n_fixed": 0, "n_programmable": 1,
        "events": [{"name": "A", "kind": "programmable"}]
    })");

    auto no_horizon = base;
    no_horizon.erase("horizon");
    CHECK_THROWS_AS(scenario_from_json(no_horizon, tmp.path()), SchemaError);

    auto bad_mode = base;
    bad_mode["policy"]["mode"] = "streaming";
    CHECK_THROWS_AS(scenario_from_json(bad_mode, tmp.path()), SchemaError);

    auto no_schedule = base;  // multiplexed default needs a schedule path
    CHECK_THROWS_AS(scenario_from_json(no_schedule, tmp.path()), SchemaError);

    auto polling_no_duration = base;
    polling_no_duration["policy"]["mode"] = "polling";
    CHECK_THROWS_AS(scenario_from_json(polling_no_duration, tmp.path()), SchemaError);

    auto bad_threshold = base;
    bad_threshold["policy"]["threshold"] = 0.0;
    CHECK_THROWS_AS(scenario_from_json(bad_threshold, tmp.path()), SchemaError);
}
