#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "event_model.hpp"
#include "mcmc.hpp"
#include "measurement.hpp"
#include "relations.hpp"

namespace bayesperf {

// Diagonal Gaussian in natural parameters. precision == 0 is the flat
// (uninitialized) site; sites may carry negative precision transiently, the
// global product must not.
struct NaturalGaussian {
    double precision = 0.0;
    double precision_mean = 0.0;

    static NaturalGaussian from_moments(double mean, double variance);
    double mean() const { return precision_mean / precision; }
    double variance() const { return 1.0 / precision; }
    bool proper() const { return precision > 0.0; }

    NaturalGaussian operator+(const NaturalGaussian& o) const {
        return {precision + o.precision, precision_mean + o.precision_mean};
    }
    NaturalGaussian operator-(const NaturalGaussian& o) const {
        return {precision - o.precision, precision_mean - o.precision_mean};
    }
};

// g / g_k by natural-parameter subtraction; nullopt when the result is
// degenerate (precision <= 0) and the caller must skip or damp the site.
std::optional<NaturalGaussian> cavity(const NaturalGaussian& global, const NaturalGaussian& site);

// damping * proposed + (1 - damping) * old, in natural parameters.
NaturalGaussian damped_blend(const NaturalGaussian& old_site, const NaturalGaussian& proposed,
                             double damping);

// --- tilted-distribution description for one site ---------------------------
// Variables are site-local indices. Observations are Gaussian likelihoods
// around the pooled linux-scaled value; factor bindings map scope events to
// local variables; temporal links tie an event's copies in adjacent slices.

struct SiteObservation {
    int var = 0;
    double mean = 0.0;
    double sigma = 1.0;
};

struct SiteFactorRef {
    const RelationFactor* factor = nullptr;
    std::map<std::string, int> binding;
    // When > 0, the residual is penalized under this fixed sigma instead of
    // the factor's value-dependent one. A sigma that tightens as the state
    // shrinks can pin the sampler against the constraint surface, so the
    // window solver freezes it from the current belief before each pass.
    double sigma = 0.0;
};

struct SiteTemporal {
    int var_prev = 0;
    int var_cur = 0;
    double sigma = 1.0;
};

struct TiltedMoments {
    std::vector<double> mean;
    std::vector<double> variance;
    std::vector<double> se;  // batch-means standard error per variable
    double acceptance_rate = 0.0;
    bool warning = false;  // acceptance outside [0.1, 0.6]
};

// MCMC estimate of the tilted moments g_-k * (likelihood * factors). When
// positive_domain is set, variables are sampled in log-space. warm_state and
// warm_scales (sampling space) carry the chain across calls; when empty the
// chain starts at the cavity mean with proposal_scale * cavity sd steps.
TiltedMoments tilted_moments(const std::vector<NaturalGaussian>& cavity_naturals,
                             const std::vector<double>& scales,
                             const std::vector<SiteObservation>& observations,
                             const std::vector<SiteFactorRef>& factors,
                             const std::vector<SiteTemporal>& temporals, bool positive_domain,
                             double proposal_scale, const McmcOptions& options,
                             std::vector<double>* warm_state, std::vector<double>* warm_scales);

struct EpConfig {
    int k_window = 5;
    double damping = 0.8;
    double convergence_tol = 5e-3;
    int max_iterations = 30;
    long mcmc_samples = 400;  // kept per site per iteration
    long mcmc_burnin = 200;
    double proposal_scale = 0.5;  // initial, relative to the cavity sd
    std::uint64_t seed = 0;
    int threads = 1;
    bool positive_domain = true;
    bool temporal_smoothing = true;
    double temporal_rel_sigma = 0.05;
    double single_sample_rel_sigma = 0.25;
    double min_obs_rel_sigma = 1e-6;

    void check() const;  // throws SchemaError
};

struct EventPosterior {
    long slice = 0;
    std::string event;
    double mean = 0.0;
    double variance = 0.0;
    double mle = 0.0;  // posterior mean of the Gaussian approximation
    long n_mcmc_samples = 0;
    std::vector<std::string> warnings;
    double mc_se = 0.0;  // not serialized; Monte Carlo error bound for tests
};

// Expectation Propagation over the schedule's slices: chains split at
// break_before markers, tumbling k_window windows per chain, posteriors for
// every event an observation or an active factor touches. Throws
// NoObservationsError when a window has no samples at all.
std::vector<EventPosterior> run_inference(const FactorGraph& graph, const Schedule& schedule,
                                          const SampleBatch& batch, const EpConfig& config);

// Profiles a global multiplier on every factor's slack_sigma over a candidate
// grid, scoring by the Gaussian predictive log-likelihood of the pooled
// observations; returns the best multiplier (smallest on ties).
double profile_slack_multiplier(const EventCatalog& catalog, const RelationSet& relations,
                                const Schedule& schedule, const SampleBatch& batch,
                                const EpConfig& config, const std::vector<double>& grid);

extern const char* const kPosteriorCsvHeader;  // slice,event,mean,variance,mle,n_samples,warnings

std::string posteriors_to_csv(const std::vector<EventPosterior>& posteriors);
std::vector<EventPosterior> posteriors_from_csv(const std::string& content);
std::vector<EventPosterior> load_posteriors(const std::string& path);
void save_posteriors(const std::vector<EventPosterior>& posteriors, const std::string& path);

nlohmann::json posteriors_to_json(const std::vector<EventPosterior>& posteriors);
std::vector<EventPosterior> posteriors_from_json(const nlohmann::json& j);

}  // namespace bayesperf
