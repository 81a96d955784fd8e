/* C interface to the bayesperf library: opaque handles, status codes, and a
 * thread-local error message. All loaders allocate a handle on success; every
 * handle has a matching _free that accepts NULL. Strings returned through
 * char** are owned by the caller and released with bp_string_free; const
 * char* results are borrowed and live as long as their handle. */

#ifndef BAYESPERF_H
#define BAYESPERF_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bp_status {
    BP_OK = 0,
    BP_ERR_INPUT = 2,  /* parse, schema, or validation failure */
    BP_ERR_RUNTIME = 3 /* numerical or runtime failure */
} bp_status;

/* Message for the most recent failure on this thread. */
const char* bp_last_error(void);
const char* bp_version(void);
void bp_string_free(char* s);

typedef struct bp_catalog bp_catalog;
typedef struct bp_relations bp_relations;
typedef struct bp_schedule bp_schedule;
typedef struct bp_transform_result bp_transform_result;
typedef struct bp_scenario bp_scenario;
typedef struct bp_trace bp_trace;
typedef struct bp_truth bp_truth;
typedef struct bp_posteriors bp_posteriors;
typedef struct bp_report bp_report;

bp_status bp_catalog_load(const char* path, bp_catalog** out);
void bp_catalog_free(bp_catalog* catalog);

bp_status bp_relations_load(const char* path, bp_relations** out);
void bp_relations_free(bp_relations* relations);

bp_status bp_schedule_load(const char* path, bp_schedule** out);
bp_status bp_schedule_save(const bp_schedule* schedule, const char* path);
void bp_schedule_free(bp_schedule* schedule);
size_t bp_schedule_size(const bp_schedule* schedule);
int bp_schedule_slice_break_before(const bp_schedule* schedule, size_t index);
/* "c0=EVENT c2=OTHER" for one slice. */
bp_status bp_schedule_slice_describe(const bp_schedule* schedule, size_t index, char** out);
bp_status bp_schedule_check(const bp_catalog* catalog, const bp_schedule* schedule);

/* Rewrites the requested schedule so consecutive slices share statistical
 * dependencies, inserting bridging slices or break markers as needed. */
bp_status bp_transform_schedule(const bp_catalog* catalog, const bp_relations* relations,
                                const bp_schedule* requested, bp_transform_result** out);
const bp_schedule* bp_transform_result_schedule(const bp_transform_result* result);
size_t bp_transform_n_inserted(const bp_transform_result* result);
size_t bp_transform_n_breaks(const bp_transform_result* result);
int bp_transform_slice_inserted(const bp_transform_result* result, size_t index);
void bp_transform_result_free(bp_transform_result* result);

bp_status bp_scenario_load(const char* path, bp_scenario** out);
void bp_scenario_free(bp_scenario* scenario);
/* Generates ground truth and the noisy trace. When has_seed_override is
 * nonzero, seed_override replaces the scenario's seed. */
bp_status bp_scenario_run(const bp_scenario* scenario, uint64_t seed_override,
                          int has_seed_override, bp_trace** out_trace, bp_truth** out_truth);

bp_status bp_trace_load(const char* path, bp_trace** out);
bp_status bp_trace_save(const bp_trace* trace, const char* path);
void bp_trace_free(bp_trace* trace);
size_t bp_trace_size(const bp_trace* trace);

bp_status bp_truth_load(const char* path, bp_truth** out);
bp_status bp_truth_save(const bp_truth* truth, const char* path);
void bp_truth_free(bp_truth* truth);
size_t bp_truth_size(const bp_truth* truth);

typedef struct bp_infer_options {
    int k_window;
    double damping;
    double convergence_tol;
    int max_iterations;
    long mcmc_samples;
    long mcmc_burnin;
    uint64_t seed;
    int threads;
    int positive_domain;    /* nonzero: event values constrained to >= 0 */
    int temporal_smoothing; /* nonzero: link an event's adjacent slices */
    double temporal_rel_sigma; /* smoothness sigma per slice, relative to the event level */
    double min_obs_rel_sigma;  /* floor on the observation sigma, relative to the mean */
    double single_sample_rel_sigma; /* assumed sigma for a lone sample, relative to the mean */
} bp_infer_options;

void bp_infer_options_default(bp_infer_options* options);

bp_status bp_infer(const bp_catalog* catalog, const bp_relations* relations,
                   const bp_schedule* schedule, const bp_trace* trace,
                   const bp_infer_options* options, bp_posteriors** out);

bp_status bp_posteriors_load(const char* path, bp_posteriors** out);
bp_status bp_posteriors_save(const bp_posteriors* posteriors, const char* path);
bp_status bp_posteriors_save_json(const bp_posteriors* posteriors, const char* path);
void bp_posteriors_free(bp_posteriors* posteriors);
size_t bp_posteriors_size(const bp_posteriors* posteriors);
bp_status bp_posteriors_get(const bp_posteriors* posteriors, size_t index, long* slice,
                            const char** event, double* mean, double* variance, double* mle);

typedef struct bp_eval_options {
    int outlier_window;
    double outlier_z;
    double normalization; /* <= 0: report unnormalized errors */
} bp_eval_options;

void bp_eval_options_default(bp_eval_options* options);

bp_status bp_eval(const bp_truth* truth, const bp_trace* trace, const bp_posteriors* posteriors,
                  const bp_eval_options* options, bp_report** out);

bp_status bp_report_save(const bp_report* report, const char* path);
bp_status bp_report_save_json(const bp_report* report, const char* path);
void bp_report_free(bp_report* report);
size_t bp_report_size(const bp_report* report);
bp_status bp_report_get(const bp_report* report, size_t index, const char** event,
                        const char** method, double* error, double* normalized_error,
                        long* n_pairs);

#ifdef __cplusplus
}
#endif

#endif /* BAYESPERF_H */
