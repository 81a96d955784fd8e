#include "bayesperf.h"

#include <cstdlib>
#include <cstring>
#include <sstream>
#include <string>

#include "errors.hpp"
#include "io_util.hpp"
#include "evaluation.hpp"
#include "event_model.hpp"
#include "inference.hpp"
#include "measurement.hpp"
#include "relations.hpp"
#include "scheduler.hpp"
#include "simulator.hpp"

struct bp_catalog {
    bayesperf::EventCatalog v;
};
struct bp_relations {
    bayesperf::RelationSet v;
};
struct bp_schedule {
    bayesperf::Schedule v;
};
struct bp_transform_result {
    bayesperf::TransformResult v;
    bp_schedule schedule_view;
};
struct bp_scenario {
    bayesperf::Scenario v;
};
struct bp_trace {
    bayesperf::SampleBatch v;
};
struct bp_truth {
    bayesperf::GroundTruth v;
};
struct bp_posteriors {
    std::vector<bayesperf::EventPosterior> v;
};
struct bp_report {
    bayesperf::ErrorReport v;
};

namespace {

thread_local std::string g_last_error;

bp_status classify(const bayesperf::Error& e) {
    using namespace bayesperf;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const SchemaError*>(&e) ||
        dynamic_cast<const UnknownEventError*>(&e) ||
        dynamic_cast<const DuplicateFactorIdError*>(&e) ||
        dynamic_cast<const InvalidScheduleError*>(&e) || dynamic_cast<const NoPathError*>(&e) ||
        dynamic_cast<const UnderdeterminedWorkloadError*>(&e) ||
        dynamic_cast<const EmptySeriesError*>(&e) ||
        dynamic_cast<const ZeroReferenceError*>(&e) || dynamic_cast<const IoError*>(&e))
        return BP_ERR_INPUT;
    return BP_ERR_RUNTIME;
}

template <typename F>
bp_status guarded(F&& f) {
    try {
        f();
        return BP_OK;
    } catch (const bayesperf::Error& e) {
        g_last_error = e.what();
        return classify(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return BP_ERR_RUNTIME;
    }
}

bp_status require(bool ok, const char* what) {
    if (ok) return BP_OK;
    g_last_error = std::string("invalid argument: ") + what;
    return BP_ERR_INPUT;
}

}  // namespace

extern "C" {

const char* bp_last_error(void) { return g_last_error.c_str(); }

const char* bp_version(void) { return "0.1.0"; }

void bp_string_free(char* s) { std::free(s); }

bp_status bp_catalog_load(const char* path, bp_catalog** out) {
    if (auto s = require(path && out, "catalog path/out")) return s;
    return guarded([&] { *out = new bp_catalog{bayesperf::load_catalog(path)}; });
}

void bp_catalog_free(bp_catalog* catalog) { delete catalog; }

bp_status bp_relations_load(const char* path, bp_relations** out) {
    if (auto s = require(path && out, "relations path/out")) return s;
    return guarded([&] { *out = new bp_relations{bayesperf::load_relations(path)}; });
}

void bp_relations_free(bp_relations* relations) { delete relations; }

bp_status bp_schedule_load(const char* path, bp_schedule** out) {
    if (auto s = require(path && out, "schedule path/out")) return s;
    return guarded([&] { *out = new bp_schedule{bayesperf::load_schedule(path)}; });
}

bp_status bp_schedule_save(const bp_schedule* schedule, const char* path) {
    if (auto s = require(schedule && path, "schedule/path")) return s;
    return guarded([&] { bayesperf::save_schedule(schedule->v, path); });
}

void bp_schedule_free(bp_schedule* schedule) { delete schedule; }

size_t bp_schedule_size(const bp_schedule* schedule) {
    return schedule ? schedule->v.slices.size() : 0;
}

int bp_schedule_slice_break_before(const bp_schedule* schedule, size_t index) {
    if (!schedule || index >= schedule->v.slices.size()) return 0;
    return schedule->v.slices[index].break_before ? 1 : 0;
}

bp_status bp_schedule_slice_describe(const bp_schedule* schedule, size_t index, char** out) {
    if (auto s = require(schedule && out, "schedule/out")) return s;
    if (auto s = require(index < schedule->v.slices.size(), "slice index in range")) return s;
    return guarded([&] {
        std::ostringstream text;
        bool first = true;
        for (const auto& [counter, event] : schedule->v.slices[index].config.assignments()) {
            if (!first) text << " ";
            first = false;
            text << "c" << counter << "=" << event;
        }
        const std::string str = text.str();
        char* buffer = static_cast<char*>(std::malloc(str.size() + 1));
        if (!buffer) throw bayesperf::NumericError("out of memory");
        std::memcpy(buffer, str.c_str(), str.size() + 1);
        *out = buffer;
    });
}

bp_status bp_schedule_check(const bp_catalog* catalog, const bp_schedule* schedule) {
    if (auto s = require(catalog && schedule, "catalog/schedule")) return s;
    return guarded([&] { bayesperf::check_schedule(catalog->v, schedule->v); });
}

bp_status bp_transform_schedule(const bp_catalog* catalog, const bp_relations* relations,
                                const bp_schedule* requested, bp_transform_result** out) {
    if (auto s = require(catalog && relations && requested && out, "transform arguments"))
        return s;
    return guarded([&] {
        bayesperf::FactorGraph graph(catalog->v, relations->v);
        auto result = new bp_transform_result{
            bayesperf::transform_schedule(catalog->v, graph, requested->v), {}};
        result->schedule_view.v = result->v.schedule;
        *out = result;
    });
}

const bp_schedule* bp_transform_result_schedule(const bp_transform_result* result) {
    return result ? &result->schedule_view : nullptr;
}

size_t bp_transform_n_inserted(const bp_transform_result* result) {
    return result ? static_cast<size_t>(result->v.n_inserted) : 0;
}

size_t bp_transform_n_breaks(const bp_transform_result* result) {
    return result ? static_cast<size_t>(result->v.n_breaks) : 0;
}

int bp_transform_slice_inserted(const bp_transform_result* result, size_t index) {
    if (!result || index >= result->v.inserted.size()) return 0;
    return result->v.inserted[index] ? 1 : 0;
}

void bp_transform_result_free(bp_transform_result* result) { delete result; }

bp_status bp_scenario_load(const char* path, bp_scenario** out) {
    if (auto s = require(path && out, "scenario path/out")) return s;
    return guarded([&] { *out = new bp_scenario{bayesperf::load_scenario(path)}; });
}

void bp_scenario_free(bp_scenario* scenario) { delete scenario; }

bp_status bp_scenario_run(const bp_scenario* scenario, uint64_t seed_override,
                          int has_seed_override, bp_trace** out_trace, bp_truth** out_truth) {
    if (auto s = require(scenario && out_trace && out_truth, "scenario run arguments")) return s;
    return guarded([&] {
        bayesperf::Scenario sc = scenario->v;
        if (has_seed_override) sc.seed = seed_override;
        auto result = bayesperf::run_scenario(sc);
        *out_truth = new bp_truth{std::move(result.truth)};
        *out_trace = new bp_trace{std::move(result.trace)};
    });
}

bp_status bp_trace_load(const char* path, bp_trace** out) {
    if (auto s = require(path && out, "trace path/out")) return s;
    return guarded([&] { *out = new bp_trace{bayesperf::load_trace(path)}; });
}

bp_status bp_trace_save(const bp_trace* trace, const char* path) {
    if (auto s = require(trace && path, "trace/path")) return s;
    return guarded([&] { bayesperf::save_trace(trace->v, path); });
}

void bp_trace_free(bp_trace* trace) { delete trace; }

size_t bp_trace_size(const bp_trace* trace) { return trace ? trace->v.samples.size() : 0; }

bp_status bp_truth_load(const char* path, bp_truth** out) {
    if (auto s = require(path && out, "truth path/out")) return s;
    return guarded([&] { *out = new bp_truth{bayesperf::load_truth(path)}; });
}

bp_status bp_truth_save(const bp_truth* truth, const char* path) {
    if (auto s = require(truth && path, "truth/path")) return s;
    return guarded([&] { bayesperf::save_truth(truth->v, path); });
}

void bp_truth_free(bp_truth* truth) { delete truth; }

size_t bp_truth_size(const bp_truth* truth) { return truth ? truth->v.size() : 0; }

void bp_infer_options_default(bp_infer_options* options) {
    if (!options) return;
    const bayesperf::EpConfig defaults;
    options->k_window = defaults.k_window;
    options->damping = defaults.damping;
    options->convergence_tol = defaults.convergence_tol;
    options->max_iterations = defaults.max_iterations;
    options->mcmc_samples = defaults.mcmc_samples;
    options->mcmc_burnin = defaults.mcmc_burnin;
    options->seed = defaults.seed;
    options->threads = defaults.threads;
    options->positive_domain = defaults.positive_domain ? 1 : 0;
    options->temporal_smoothing = defaults.temporal_smoothing ? 1 : 0;
    options->temporal_rel_sigma = defaults.temporal_rel_sigma;
    options->min_obs_rel_sigma = defaults.min_obs_rel_sigma;
    options->single_sample_rel_sigma = defaults.single_sample_rel_sigma;
}

bp_status bp_infer(const bp_catalog* catalog, const bp_relations* relations,
                   const bp_schedule* schedule, const bp_trace* trace,
                   const bp_infer_options* options, bp_posteriors** out) {
    if (auto s = require(catalog && relations && schedule && trace && options && out,
                         "infer arguments"))
        return s;
    return guarded([&] {
        bayesperf::EpConfig config;
        config.k_window = options->k_window;
        config.damping = options->damping;
        config.convergence_tol = options->convergence_tol;
        config.max_iterations = options->max_iterations;
        config.mcmc_samples = options->mcmc_samples;
        config.mcmc_burnin = options->mcmc_burnin;
        config.seed = options->seed;
        config.threads = options->threads;
        config.positive_domain = options->positive_domain != 0;
        config.temporal_smoothing = options->temporal_smoothing != 0;
        config.temporal_rel_sigma = options->temporal_rel_sigma;
        config.min_obs_rel_sigma = options->min_obs_rel_sigma;
        config.single_sample_rel_sigma = options->single_sample_rel_sigma;
        bayesperf::check_schedule(catalog->v, schedule->v);
        bayesperf::check_batch(catalog->v, schedule->v, trace->v);
        bayesperf::FactorGraph graph(catalog->v, relations->v);
        *out = new bp_posteriors{
            bayesperf::run_inference(graph, schedule->v, trace->v, config)};
    });
}

bp_status bp_posteriors_load(const char* path, bp_posteriors** out) {
    if (auto s = require(path && out, "posteriors path/out")) return s;
    return guarded([&] { *out = new bp_posteriors{bayesperf::load_posteriors(path)}; });
}

bp_status bp_posteriors_save(const bp_posteriors* posteriors, const char* path) {
    if (auto s = require(posteriors && path, "posteriors/path")) return s;
    return guarded([&] { bayesperf::save_posteriors(posteriors->v, path); });
}

bp_status bp_posteriors_save_json(const bp_posteriors* posteriors, const char* path) {
    if (auto s = require(posteriors && path, "posteriors/path")) return s;
    return guarded([&] {
        bayesperf::write_file(path, bayesperf::posteriors_to_json(posteriors->v).dump(2) + "\n");
    });
}

void bp_posteriors_free(bp_posteriors* posteriors) { delete posteriors; }

size_t bp_posteriors_size(const bp_posteriors* posteriors) {
    return posteriors ? posteriors->v.size() : 0;
}

bp_status bp_posteriors_get(const bp_posteriors* posteriors, size_t index, long* slice,
                            const char** event, double* mean, double* variance, double* mle) {
    if (auto s = require(posteriors && index < posteriors->v.size(), "posterior index"))
        return s;
    const auto& p = posteriors->v[index];
    if (slice) *slice = p.slice;
    if (event) *event = p.event.c_str();
    if (mean) *mean = p.mean;
    if (variance) *variance = p.variance;
    if (mle) *mle = p.mle;
    return BP_OK;
}

void bp_eval_options_default(bp_eval_options* options) {
    if (!options) return;
    options->outlier_window = 9;
    options->outlier_z = 3.0;
    options->normalization = 0.0;
}

bp_status bp_eval(const bp_truth* truth, const bp_trace* trace, const bp_posteriors* posteriors,
                  const bp_eval_options* options, bp_report** out) {
    if (auto s = require(truth && trace && options && out, "eval arguments")) return s;
    return guarded([&] {
        static const std::vector<bayesperf::EventPosterior> kEmpty;
        const auto& post = posteriors ? posteriors->v : kEmpty;
        std::optional<double> normalization;
        if (options->normalization > 0) normalization = options->normalization;
        *out = new bp_report{bayesperf::build_report(truth->v, trace->v, post,
                                                     options->outlier_window, options->outlier_z,
                                                     normalization)};
    });
}

bp_status bp_report_save(const bp_report* report, const char* path) {
    if (auto s = require(report && path, "report/path")) return s;
    return guarded([&] { bayesperf::save_report(report->v, path); });
}

bp_status bp_report_save_json(const bp_report* report, const char* path) {
    if (auto s = require(report && path, "report/path")) return s;
    return guarded([&] {
        bayesperf::write_file(path, bayesperf::report_to_json(report->v).dump(2) + "\n");
    });
}

void bp_report_free(bp_report* report) { delete report; }

size_t bp_report_size(const bp_report* report) { return report ? report->v.rows.size() : 0; }

bp_status bp_report_get(const bp_report* report, size_t index, const char** event,
                        const char** method, double* error, double* normalized_error,
                        long* n_pairs) {
    if (auto s = require(report && index < report->v.rows.size(), "report index")) return s;
    const auto& row = report->v.rows[index];
    if (event) *event = row.event.c_str();
    if (method) *method = row.method.c_str();
    if (error) *error = row.error;
    if (normalized_error) *normalized_error = row.normalized_error;
    if (n_pairs) *n_pairs = row.n_pairs;
    return BP_OK;
}

}  // extern "C"
