// Command-line driver for the bayesperf library. Talks to the library
// exclusively through the C API in bayesperf.h.
//
// Exit codes: 0 success, 2 input/validation error, 3 runtime/numerical error.
// BAYESPERF_LOG=error|warn|info|debug controls library logging.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include <bayesperf.h>

namespace {

template <typename T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, std::integral_constant<decltype(Free), Free>>;

using CatalogHandle = Handle<bp_catalog, bp_catalog_free>;
using RelationsHandle = Handle<bp_relations, bp_relations_free>;
using ScheduleHandle = Handle<bp_schedule, bp_schedule_free>;
using TransformHandle = Handle<bp_transform_result, bp_transform_result_free>;
using ScenarioHandle = Handle<bp_scenario, bp_scenario_free>;
using TraceHandle = Handle<bp_trace, bp_trace_free>;
using TruthHandle = Handle<bp_truth, bp_truth_free>;
using PosteriorsHandle = Handle<bp_posteriors, bp_posteriors_free>;
using ReportHandle = Handle<bp_report, bp_report_free>;

int fail(bp_status status) {
    std::fprintf(stderr, "error: %s\n", bp_last_error());
    return static_cast<int>(status);
}

#define BP_TRY(call)                                  \
    do {                                              \
        const bp_status bp_try_status = (call);       \
        if (bp_try_status != BP_OK) return fail(bp_try_status); \
    } while (0)

struct ScheduleArgs {
    std::string catalog, relations, schedule, out;
};

int run_schedule(const ScheduleArgs& args) {
    bp_catalog* catalog_raw = nullptr;
    BP_TRY(bp_catalog_load(args.catalog.c_str(), &catalog_raw));
    CatalogHandle catalog(catalog_raw);
    bp_relations* relations_raw = nullptr;
    BP_TRY(bp_relations_load(args.relations.c_str(), &relations_raw));
    RelationsHandle relations(relations_raw);
    bp_schedule* requested_raw = nullptr;
    BP_TRY(bp_schedule_load(args.schedule.c_str(), &requested_raw));
    ScheduleHandle requested(requested_raw);

    bp_transform_result* result_raw = nullptr;
    BP_TRY(bp_transform_schedule(catalog.get(), relations.get(), requested.get(), &result_raw));
    TransformHandle result(result_raw);

    const bp_schedule* transformed = bp_transform_result_schedule(result.get());
    BP_TRY(bp_schedule_save(transformed, args.out.c_str()));

    for (size_t i = 0; i < bp_schedule_size(transformed); ++i) {
        char* described = nullptr;
        BP_TRY(bp_schedule_slice_describe(transformed, i, &described));
        const char* mark = bp_transform_slice_inserted(result.get(), i)
                               ? " [inserted]"
                               : (bp_schedule_slice_break_before(transformed, i) ? " [break]"
                                                                                 : "");
        std::printf("slice %zu%s: %s\n", i, mark, described);
        bp_string_free(described);
    }
    std::printf("transform: %zu slices (%zu inserted), %zu breaks\n",
                bp_schedule_size(transformed), bp_transform_n_inserted(result.get()),
                bp_transform_n_breaks(result.get()));
    return 0;
}

struct SimulateArgs {
    std::string scenario, out;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int run_simulate(const SimulateArgs& args) {
    bp_scenario* scenario_raw = nullptr;
    BP_TRY(bp_scenario_load(args.scenario.c_str(), &scenario_raw));
    ScenarioHandle scenario(scenario_raw);

    std::error_code ec;
    std::filesystem::create_directories(args.out, ec);
    if (ec) {
        std::fprintf(stderr, "error: cannot create output directory %s: %s\n", args.out.c_str(),
                     ec.message().c_str());
        return 2;
    }

    bp_trace* trace_raw = nullptr;
    bp_truth* truth_raw = nullptr;
    BP_TRY(bp_scenario_run(scenario.get(), args.seed, args.seed_set ? 1 : 0, &trace_raw,
                           &truth_raw));
    TraceHandle trace(trace_raw);
    TruthHandle truth(truth_raw);

    const std::string trace_path = args.out + "/trace.csv";
    const std::string truth_path = args.out + "/truth.csv";
    BP_TRY(bp_trace_save(trace.get(), trace_path.c_str()));
    BP_TRY(bp_truth_save(truth.get(), truth_path.c_str()));
    std::printf("wrote %s (%zu samples) and %s (%zu slices)\n", trace_path.c_str(),
                bp_trace_size(trace.get()), truth_path.c_str(), bp_truth_size(truth.get()));
    return 0;
}

struct InferArgs {
    std::string catalog, relations, schedule, trace, out, out_json;
    bp_infer_options options{};
};

int run_infer(const InferArgs& args) {
    bp_catalog* catalog_raw = nullptr;
    BP_TRY(bp_catalog_load(args.catalog.c_str(), &catalog_raw));
    CatalogHandle catalog(catalog_raw);
    bp_relations* relations_raw = nullptr;
    BP_TRY(bp_relations_load(args.relations.c_str(), &relations_raw));
    RelationsHandle relations(relations_raw);
    bp_schedule* schedule_raw = nullptr;
    BP_TRY(bp_schedule_load(args.schedule.c_str(), &schedule_raw));
    ScheduleHandle schedule(schedule_raw);
    bp_trace* trace_raw = nullptr;
    BP_TRY(bp_trace_load(args.trace.c_str(), &trace_raw));
    TraceHandle trace(trace_raw);

    bp_posteriors* posteriors_raw = nullptr;
    BP_TRY(bp_infer(catalog.get(), relations.get(), schedule.get(), trace.get(), &args.options,
                    &posteriors_raw));
    PosteriorsHandle posteriors(posteriors_raw);

    BP_TRY(bp_posteriors_save(posteriors.get(), args.out.c_str()));
    if (!args.out_json.empty())
        BP_TRY(bp_posteriors_save_json(posteriors.get(), args.out_json.c_str()));
    std::printf("wrote %s (%zu posteriors)\n", args.out.c_str(),
                bp_posteriors_size(posteriors.get()));
    return 0;
}

struct EvalArgs {
    std::string truth, trace, posteriors, out, out_json;
    bp_eval_options options{};
};

int run_eval(const EvalArgs& args) {
    bp_truth* truth_raw = nullptr;
    BP_TRY(bp_truth_load(args.truth.c_str(), &truth_raw));
    TruthHandle truth(truth_raw);
    bp_trace* trace_raw = nullptr;
    BP_TRY(bp_trace_load(args.trace.c_str(), &trace_raw));
    TraceHandle trace(trace_raw);
    PosteriorsHandle posteriors;
    if (!args.posteriors.empty()) {
        bp_posteriors* posteriors_raw = nullptr;
        BP_TRY(bp_posteriors_load(args.posteriors.c_str(), &posteriors_raw));
        posteriors.reset(posteriors_raw);
    }

    bp_report* report_raw = nullptr;
    BP_TRY(bp_eval(truth.get(), trace.get(), posteriors.get(), &args.options, &report_raw));
    ReportHandle report(report_raw);

    BP_TRY(bp_report_save(report.get(), args.out.c_str()));
    if (!args.out_json.empty()) BP_TRY(bp_report_save_json(report.get(), args.out_json.c_str()));

    for (size_t i = 0; i < bp_report_size(report.get()); ++i) {
        const char* event = nullptr;
        const char* method = nullptr;
        double error = 0, normalized = 0;
        long n_pairs = 0;
        BP_TRY(bp_report_get(report.get(), i, &event, &method, &error, &normalized, &n_pairs));
        std::printf("%s,%s,%.6g,%.6g,%ld\n", event, method, error, normalized, n_pairs);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian correction of multiplexed performance-counter measurements"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(bp_version()));

    ScheduleArgs schedule_args;
    auto* cmd_schedule =
        app.add_subcommand("schedule", "Transform a requested schedule so adjacent slices share "
                                       "statistical dependencies");
    cmd_schedule->add_option("--catalog", schedule_args.catalog, "Event catalog JSON")
        ->required();
    cmd_schedule->add_option("--relations", schedule_args.relations, "Relation factors JSON")
        ->required();
    cmd_schedule->add_option("--schedule", schedule_args.schedule, "Requested schedule JSON")
        ->required();
    cmd_schedule->add_option("--out", schedule_args.out, "Transformed schedule JSON")->required();

    SimulateArgs simulate_args;
    auto* cmd_simulate =
        app.add_subcommand("simulate", "Generate ground truth and a noisy trace from a scenario");
    cmd_simulate->add_option("--scenario", simulate_args.scenario, "Scenario JSON")->required();
    cmd_simulate->add_option("--out", simulate_args.out, "Output directory")->required();
    auto* seed_opt =
        cmd_simulate->add_option("--seed", simulate_args.seed, "Override the scenario seed");

    InferArgs infer_args;
    bp_infer_options_default(&infer_args.options);
    bool signed_domain = false, no_temporal = false;
    auto* cmd_infer = app.add_subcommand(
        "infer", "Run expectation propagation with embedded MCMC over a trace");
    cmd_infer->add_option("--catalog", infer_args.catalog, "Event catalog JSON")->required();
    cmd_infer->add_option("--relations", infer_args.relations, "Relation factors JSON")
        ->required();
    cmd_infer->add_option("--schedule", infer_args.schedule, "Schedule JSON (as measured)")
        ->required();
    cmd_infer->add_option("--trace", infer_args.trace, "Trace CSV")->required();
    cmd_infer->add_option("--out", infer_args.out, "Posterior CSV output")->required();
    cmd_infer->add_option("--json", infer_args.out_json, "Also write posteriors as JSON");
    cmd_infer->add_option("--seed", infer_args.options.seed, "RNG seed (default 0)");
    cmd_infer->add_option("--threads", infer_args.options.threads,
                          "Parallel site evaluations (default 1)");
    cmd_infer->add_option("--k-window", infer_args.options.k_window,
                          "Slices inferred jointly per window");
    cmd_infer->add_option("--damping", infer_args.options.damping, "EP damping in (0,1]");
    cmd_infer->add_option("--mcmc-samples", infer_args.options.mcmc_samples,
                          "Kept MCMC samples per site update");
    cmd_infer->add_option("--mcmc-burnin", infer_args.options.mcmc_burnin,
                          "Discarded MCMC samples per site update");
    cmd_infer->add_option("--max-iterations", infer_args.options.max_iterations,
                          "EP iteration cap per window");
    cmd_infer->add_option("--tol", infer_args.options.convergence_tol,
                          "Convergence tolerance on natural-parameter change");
    cmd_infer->add_option("--temporal-rel-sigma", infer_args.options.temporal_rel_sigma,
                          "Smoothness sigma per slice, relative to the event level");
    cmd_infer->add_option("--min-obs-rel-sigma", infer_args.options.min_obs_rel_sigma,
                          "Floor on the observation sigma, relative to the mean");
    cmd_infer->add_option("--single-sample-rel-sigma", infer_args.options.single_sample_rel_sigma,
                          "Assumed sigma for a lone sample, relative to the mean");
    cmd_infer->add_flag("--signed-domain", signed_domain,
                        "Allow negative event values (default: nonnegative)");
    cmd_infer->add_flag("--no-temporal-smoothing", no_temporal,
                        "Do not link an event's values across adjacent slices");

    EvalArgs eval_args;
    bp_eval_options_default(&eval_args.options);
    auto* cmd_eval =
        app.add_subcommand("eval", "Compare correction methods against ground truth");
    cmd_eval->add_option("--truth", eval_args.truth, "Ground-truth CSV")->required();
    cmd_eval->add_option("--trace", eval_args.trace, "Trace CSV")->required();
    cmd_eval->add_option("--posteriors", eval_args.posteriors, "Posterior CSV from infer");
    cmd_eval->add_option("--out", eval_args.out, "Report CSV output")->required();
    cmd_eval->add_option("--json", eval_args.out_json, "Also write the report as JSON");
    cmd_eval->add_option("--outlier-window", eval_args.options.outlier_window,
                         "Window of the outlier-drop baseline");
    cmd_eval->add_option("--outlier-z", eval_args.options.outlier_z,
                         "Robust z threshold of the outlier-drop baseline");
    cmd_eval->add_option("--normalization", eval_args.options.normalization,
                         "Run-to-run normalization constant (> 0)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (cmd_schedule->parsed()) return run_schedule(schedule_args);
    if (cmd_simulate->parsed()) {
        simulate_args.seed_set = seed_opt->count() > 0;
        return run_simulate(simulate_args);
    }
    if (cmd_infer->parsed()) {
        infer_args.options.positive_domain = signed_domain ? 0 : 1;
        infer_args.options.temporal_smoothing = no_temporal ? 0 : 1;
        return run_infer(infer_args);
    }
    if (cmd_eval->parsed()) return run_eval(eval_args);
    return 2;
}
