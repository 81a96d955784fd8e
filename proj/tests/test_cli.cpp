#include <doctest.h>

#include <array>
#include <cstdio>
#include <string>
#include <sys/wait.h>

#include "evaluation.hpp"
#include "inference.hpp"
#include "measurement.hpp"
#include "simulator.hpp"
#include "test_util.hpp"

namespace {

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string command = std::string(BAYESPERF_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string captured;
    std::array<char, 4096> buffer;
    while (std::fgets(buffer.data(), static_cast<int>(buffer.size()), pipe) != nullptr)
        captured += buffer.data();
    const int raw = pclose(pipe);
    if (output) *output = captured;
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

struct CliFixture {
    testutil::TempDir tmp;

    CliFixture() {
        testutil::write_text(tmp.file("catalog.json"), R"({
            "n_fixed": 1, "n_programmable": 2,
            "events": [
                {"name": "CLK", "kind": "fixed"},
                {"name": "A", "kind": "programmable"},
                {"name": "B", "kind": "programmable"},
                {"name": "C", "kind": "programmable"},
                {"name": "D", "kind": "programmable"}
            ]
        })");
        testutil::write_text(tmp.file("relations.json"), R"json({
            "factors": [
                {"id": "r1", "lhs": "B", "rhs": "(mul 2 A)"},
                {"id": "r2", "lhs": "C", "rhs": "(mul 3 B)"}
            ]
        })json");
        testutil::write_text(tmp.file("requested.json"), R"({
            "slice_duration": 1.0,
            "slices": [
                {"assignments": {"c0": "A"}},
                {"assignments": {"c0": "C"}}
            ]
        })");
        testutil::write_text(tmp.file("run_schedule.json"), R"({
            "slice_duration": 1.0,
            "slices": [
                {"assignments": {"c0": "A", "c1": "B"}},
                {"assignments": {"c0": "C"}}
            ]
        })");
        testutil::write_text(tmp.file("scenario.json"), R"({
            "catalog": "catalog.json",
            "relations": "relations.json",
            "schedule": "run_schedule.json",
            "seed": 3,
            "horizon": 2,
            "workload": {"phases": [
                {"duration_slices": 2, "rates": {"CLK": 1000.0, "A": 5.0, "D": 2.0}}
            ]},
            "noise": {"relative_sigma": 0.15},
            "policy": {"threshold": 100.0}
        })");
        testutil::write_text(tmp.file("clean_scenario.json"), R"({
            "catalog": "catalog.json",
            "relations": "relations.json",
            "schedule": "run_schedule.json",
            "horizon": 2,
            "workload": {"phases": [
                {"duration_slices": 2, "rates": {"CLK": 1000.0, "A": 5.0, "D": 2.0}}
            ]},
            "policy": {"threshold": 100.0}
        })");
    }

    std::string path(const std::string& name) { return tmp.file(name); }
};

}  // namespace

TEST_CASE("help and version") {
    std::string out;
    CHECK(run_cli("--help", &out) == 0);
    CHECK(out.find("schedule") != std::string::npos);
    CHECK(out.find("simulate") != std::string::npos);
    CHECK(out.find("infer") != std::string::npos);
    CHECK(out.find("eval") != std::string::npos);
    CHECK(run_cli("--version", &out) == 0);
    CHECK_FALSE(out.empty());
    CHECK(run_cli("bogus-subcommand", &out) == 2);
    CHECK(run_cli("", &out) == 2);  // a subcommand is required
}

TEST_CASE("schedule subcommand transforms and reports") {
    CliFixture fx;
    std::string out;
    const int rc = run_cli("schedule --catalog " + fx.path("catalog.json") + " --relations " +
                               fx.path("relations.json") + " --schedule " +
                               fx.path("requested.json") + " --out " + fx.path("out.json"),
                           &out);
    CHECK(rc == 0);
    CHECK(out.find("[inserted]") != std::string::npos);
    CHECK(out.find("transform: 3 slices (1 inserted), 0 breaks") != std::string::npos);
    const auto transformed = bayesperf::load_schedule(fx.path("out.json"));
    CHECK(transformed.slices.size() == 3);

    SUBCASE("missing required flag") {
        CHECK(run_cli("schedule --catalog " + fx.path("catalog.json"), &out) == 2);
    }
    SUBCASE("missing input file") {
        CHECK(run_cli("schedule --catalog " + fx.path("nope.json") + " --relations " +
                          fx.path("relations.json") + " --schedule " + fx.path("requested.json") +
                          " --out " + fx.path("x.json"),
                      &out) == 2);
        CHECK(out.find("error:") != std::string::npos);
    }
    SUBCASE("unreachable slices become breaks") {
        testutil::write_text(fx.path("island.json"), R"({
            "slices": [
                {"assignments": {"c0": "A"}},
                {"assignments": {"c0": "D"}}
            ]
        })");
        CHECK(run_cli("schedule --catalog " + fx.path("catalog.json") + " --relations " +
                          fx.path("relations.json") + " --schedule " + fx.path("island.json") +
                          " --out " + fx.path("island_out.json"),
                      &out) == 0);
        CHECK(out.find("[break]") != std::string::npos);
        CHECK(out.find("transform: 2 slices (0 inserted), 1 breaks") != std::string::npos);
    }
}

TEST_CASE("simulate subcommand writes deterministic outputs") {
    CliFixture fx;
    std::string out;
    const std::string base = "simulate --scenario " + fx.path("scenario.json");
    CHECK(run_cli(base + " --out " + fx.path("run1"), &out) == 0);
    CHECK(out.find("trace.csv") != std::string::npos);
    CHECK(run_cli(base + " --out " + fx.path("run2"), &out) == 0);
    CHECK(testutil::read_text(fx.path("run1/trace.csv")) ==
          testutil::read_text(fx.path("run2/trace.csv")));
    CHECK(testutil::read_text(fx.path("run1/truth.csv")) ==
          testutil::read_text(fx.path("run2/truth.csv")));

    CHECK(run_cli(base + " --seed 77 --out " + fx.path("run3"), &out) == 0);
    CHECK(testutil::read_text(fx.path("run1/trace.csv")) !=
          testutil::read_text(fx.path("run3/trace.csv")));

    SUBCASE("noiseless traces scale back to the truth") {
        CHECK(run_cli("simulate --scenario " + fx.path("clean_scenario.json") + " --out " +
                          fx.path("clean"),
                      &out) == 0);
        const auto trace = bayesperf::load_trace(fx.path("clean/trace.csv"));
        const auto truth = bayesperf::load_truth(fx.path("clean/truth.csv"));
        REQUIRE(truth.size() == 2);
        for (const auto& sample : trace.samples)
            CHECK(bayesperf::linux_scale(sample) ==
                  doctest::Approx(truth[static_cast<std::size_t>(sample.slice)].at(sample.event))
                      .epsilon(1e-12));
    }
    SUBCASE("malformed scenario") {
        testutil::write_text(fx.path("broken.json"), "{");
        CHECK(run_cli("simulate --scenario " + fx.path("broken.json") + " --out " +
                          fx.path("x"),
                      &out) == 2);
        CHECK(out.find("error:") != std::string::npos);
    }
}

TEST_CASE("infer and eval subcommands complete the pipeline") {
    CliFixture fx;
    std::string out;
    REQUIRE(run_cli("simulate --scenario " + fx.path("scenario.json") + " --out " +
                        fx.path("sim"),
                    &out) == 0);

    const std::string infer_base =
        "infer --catalog " + fx.path("catalog.json") + " --relations " +
        fx.path("relations.json") + " --schedule " + fx.path("run_schedule.json") + " --trace " +
        fx.path("sim/trace.csv") + " --mcmc-samples 150 --mcmc-burnin 60 --seed 4";
    CHECK(run_cli(infer_base + " --out " + fx.path("posteriors.csv") + " --json " +
                      fx.path("posteriors.json"),
                  &out) == 0);
    CHECK(out.find("posteriors") != std::string::npos);
    const auto posteriors = bayesperf::load_posteriors(fx.path("posteriors.csv"));
    CHECK_FALSE(posteriors.empty());
    CHECK_FALSE(bayesperf::posteriors_from_json(
                    nlohmann::json::parse(testutil::read_text(fx.path("posteriors.json"))))
                    .empty());

    // Same seed, same bytes.
    CHECK(run_cli(infer_base + " --out " + fx.path("posteriors_again.csv"), &out) == 0);
    CHECK(testutil::read_text(fx.path("posteriors.csv")) ==
          testutil::read_text(fx.path("posteriors_again.csv")));

    const std::string eval_base = "eval --truth " + fx.path("sim/truth.csv") + " --trace " +
                                  fx.path("sim/trace.csv");
    CHECK(run_cli(eval_base + " --posteriors " + fx.path("posteriors.csv") + " --out " +
                      fx.path("report.csv") + " --json " + fx.path("report.json"),
                  &out) == 0);
    CHECK(out.find("aggregate,bayesperf") != std::string::npos);
    CHECK(out.find("aggregate,linux_scale") != std::string::npos);
    const auto report = bayesperf::load_report(fx.path("report.csv"));
    CHECK_NOTHROW(bayesperf::report_error(report, "aggregate", "bayesperf"));

    SUBCASE("eval without posteriors only scores the baselines") {
        CHECK(run_cli(eval_base + " --out " + fx.path("baselines.csv"), &out) == 0);
        CHECK(out.find("aggregate,linux_scale") != std::string::npos);
        CHECK(out.find("bayesperf") == std::string::npos);
    }
    SUBCASE("bad evaluation parameters") {
        CHECK(run_cli(eval_base + " --out " + fx.path("x.csv") + " --outlier-window 1", &out) ==
              2);
    }
    SUBCASE("explicit normalization rescales the report") {
        CHECK(run_cli(eval_base + " --posteriors " + fx.path("posteriors.csv") + " --out " +
                          fx.path("norm.csv") + " --normalization 0.5",
                      &out) == 0);
        const auto scaled = bayesperf::load_report(fx.path("norm.csv"));
        CHECK(scaled.normalization == doctest::Approx(0.5));
    }
    SUBCASE("missing trace file") {
        CHECK(run_cli("infer --catalog " + fx.path("catalog.json") + " --relations " +
                          fx.path("relations.json") + " --schedule " +
                          fx.path("run_schedule.json") + " --trace " + fx.path("nope.csv") +
                          " --out " + fx.path("x.csv"),
                      &out) == 2);
    }
}

TEST_CASE("numerical failures exit with the runtime code") {
    CliFixture fx;
    // A sample with zero enabled time cannot be scaled.
    testutil::write_text(fx.path("degenerate.csv"),
                         "slice,event,counter,value,t_enabled,t_running\n0,A,c0,5,0,1\n");
    std::string out;
    CHECK(run_cli("infer --catalog " + fx.path("catalog.json") + " --relations " +
                      fx.path("relations.json") + " --schedule " + fx.path("run_schedule.json") +
                      " --trace " + fx.path("degenerate.csv") + " --out " + fx.path("x.csv"),
                  &out) == 3);
    CHECK(out.find("error:") != std::string::npos);
}
