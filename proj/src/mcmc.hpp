#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace bayesperf {

// Log-density term touching a fixed subset of the state variables. The
// sampler only re-evaluates terms incident to the variable it moves.
struct McmcTerm {
    std::vector<int> vars;
    std::function<double(const std::vector<double>&)> logd;
};

struct McmcTarget {
    int dim = 0;
    std::vector<McmcTerm> terms;
    // Per-variable flag: report moments of exp(state) instead of the state
    // itself (for variables sampled in log-space). Empty means all raw.
    std::vector<std::uint8_t> exp_moments;
};

struct McmcOptions {
    long n_samples = 400;  // kept sweeps after burn-in
    long n_burnin = 200;
    double target_accept = 0.35;
    std::uint64_t seed = 0;
};

struct McmcResult {
    std::vector<double> mean;
    std::vector<double> variance;  // across kept sweeps, n-1 denominator
    std::vector<double> se;        // batch-means standard error of the mean
    double acceptance_rate = 0.0;  // post-burn-in, all components pooled
    bool nonconvergence = false;   // acceptance outside [0.1, 0.6]
    long n_kept = 0;
    std::vector<double> final_state;
    std::vector<double> final_scales;
};

// Component-wise random-walk Metropolis with a systematic scan. Proposal
// scales adapt per component during burn-in only. Deterministic per seed.
McmcResult run_metropolis(const McmcTarget& target, std::vector<double> init,
                          std::vector<double> init_scales, const McmcOptions& options);

}  // namespace bayesperf
