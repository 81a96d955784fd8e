#include "mcmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "rng.hpp"

namespace bayesperf {

namespace {

double safe_logd(const McmcTerm& term, const std::vector<double>& state) {
    const double v = term.logd(state);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
}

}  // namespace

McmcResult run_metropolis(const McmcTarget& target, std::vector<double> init,
                          std::vector<double> init_scales, const McmcOptions& options) {
    const int dim = target.dim;
    if (dim <= 0) throw NumericError("mcmc target has no variables");
    if (static_cast<int>(init.size()) != dim || static_cast<int>(init_scales.size()) != dim)
        throw NumericError("mcmc init size mismatch");
    if (options.n_samples <= 0 || options.n_burnin < 0)
        throw NumericError("mcmc sample counts must be positive");

    std::vector<std::vector<int>> incident(dim);
    for (std::size_t ti = 0; ti < target.terms.size(); ++ti)
        for (int v : target.terms[ti].vars)
            incident[v].push_back(static_cast<int>(ti));

    std::vector<double> term_value(target.terms.size());
    for (std::size_t ti = 0; ti < target.terms.size(); ++ti)
        term_value[ti] = safe_logd(target.terms[ti], init);

    Rng rng(options.seed);
    std::vector<double>& state = init;
    std::vector<double>& scales = init_scales;
    for (double& s : scales) s = std::max(s, 1e-12);

    // Burn-in adaptation: nudge each component's log-scale toward the target
    // acceptance every block.
    constexpr long kAdaptBlock = 25;
    std::vector<long> block_accepts(dim, 0), block_proposals(dim, 0);

    // Blocks of log-space coordinates coupled through shared terms also get
    // one translation proposal per sweep. Relations between counts are
    // homogeneous (sums and fixed ratios), so a common scaling slides along
    // the constraint surface where component-wise moves would have to fight
    // every factor at once. Uncoupled coordinates stay out of the move: they
    // gain nothing from it and their own terms would only veto the shift.
    std::vector<int> parent(static_cast<std::size_t>(dim));
    for (int v = 0; v < dim; ++v) parent[static_cast<std::size_t>(v)] = v;
    std::function<int(int)> find = [&](int v) {
        while (parent[static_cast<std::size_t>(v)] != v) {
            parent[static_cast<std::size_t>(v)] =
                parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(v)])];
            v = parent[static_cast<std::size_t>(v)];
        }
        return v;
    };
    for (const auto& term : target.terms)
        for (std::size_t i = 1; i < term.vars.size(); ++i)
            parent[static_cast<std::size_t>(find(term.vars[i]))] = find(term.vars[0]);
    std::vector<std::vector<int>> blocks;
    {
        std::vector<std::vector<int>> grouped(static_cast<std::size_t>(dim));
        for (int v = 0; v < dim; ++v) grouped[static_cast<std::size_t>(find(v))].push_back(v);
        for (auto& group : grouped) {
            if (group.size() < 2) continue;
            const bool all_log = std::all_of(group.begin(), group.end(), [&](int v) {
                return !target.exp_moments.empty() &&
                       target.exp_moments[static_cast<std::size_t>(v)];
            });
            if (all_log) blocks.push_back(std::move(group));
        }
    }
    std::vector<double> joint_scale(blocks.size(), 0.0);
    std::vector<std::vector<int>> block_terms(blocks.size());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (int v : blocks[b]) joint_scale[b] += scales[v];
        joint_scale[b] /= static_cast<double>(blocks[b].size());
        std::vector<int> touched;
        for (int v : blocks[b])
            touched.insert(touched.end(), incident[v].begin(), incident[v].end());
        std::sort(touched.begin(), touched.end());
        touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
        block_terms[b] = std::move(touched);
    }
    std::vector<long> joint_block_accepts(blocks.size(), 0),
        joint_block_proposals(blocks.size(), 0);

    long accepts = 0, proposals = 0;
    std::vector<double> sum(dim, 0.0), sumsq(dim, 0.0);
    const long n_batches = std::max<long>(1, std::min<long>(20, options.n_samples));
    const long batch_len = std::max<long>(1, options.n_samples / n_batches);
    std::vector<double> batch_sum(static_cast<std::size_t>(dim), 0.0);
    std::vector<std::vector<double>> batch_means(
        static_cast<std::size_t>(dim));

    const long total = options.n_burnin + options.n_samples;
    long kept = 0;
    for (long sweep = 0; sweep < total; ++sweep) {
        const bool burnin = sweep < options.n_burnin;
        for (int v = 0; v < dim; ++v) {
            const double old = state[v];
            const double proposed = old + scales[v] * rng.normal();
            double delta = 0.0;
            state[v] = proposed;
            std::vector<double> new_values;
            new_values.reserve(incident[v].size());
            for (int ti : incident[v]) {
                const double nv = safe_logd(target.terms[ti], state);
                new_values.push_back(nv);
                delta += nv - term_value[ti];
            }
            bool accept = delta >= 0;
            if (!accept && delta > -std::numeric_limits<double>::infinity())
                accept = std::log(rng.uniform_pos()) < delta;
            if (accept) {
                for (std::size_t i = 0; i < incident[v].size(); ++i)
                    term_value[static_cast<std::size_t>(incident[v][i])] = new_values[i];
            } else {
                state[v] = old;
            }
            if (burnin) {
                block_proposals[v] += 1;
                block_accepts[v] += accept ? 1 : 0;
                if (block_proposals[v] == kAdaptBlock) {
                    const double rate = static_cast<double>(block_accepts[v]) /
                                        static_cast<double>(block_proposals[v]);
                    scales[v] *= std::exp(0.6 * (rate - options.target_accept));
                    scales[v] = std::clamp(scales[v], 1e-12, 1e12);
                    block_proposals[v] = 0;
                    block_accepts[v] = 0;
                }
            } else {
                proposals += 1;
                accepts += accept ? 1 : 0;
            }
        }
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            const double shift = joint_scale[b] * rng.normal();
            std::vector<double> saved(blocks[b].size());
            for (std::size_t i = 0; i < blocks[b].size(); ++i) {
                saved[i] = state[static_cast<std::size_t>(blocks[b][i])];
                state[static_cast<std::size_t>(blocks[b][i])] += shift;
            }
            double delta = 0.0;
            std::vector<double> new_values(block_terms[b].size());
            for (std::size_t i = 0; i < block_terms[b].size(); ++i) {
                new_values[i] = safe_logd(target.terms[static_cast<std::size_t>(block_terms[b][i])], state);
                delta += new_values[i] - term_value[static_cast<std::size_t>(block_terms[b][i])];
            }
            bool accept = delta >= 0;
            if (!accept && delta > -std::numeric_limits<double>::infinity())
                accept = std::log(rng.uniform_pos()) < delta;
            if (accept) {
                for (std::size_t i = 0; i < block_terms[b].size(); ++i)
                    term_value[static_cast<std::size_t>(block_terms[b][i])] = new_values[i];
            } else {
                for (std::size_t i = 0; i < blocks[b].size(); ++i)
                    state[static_cast<std::size_t>(blocks[b][i])] = saved[i];
            }
            if (burnin) {
                joint_block_proposals[b] += 1;
                joint_block_accepts[b] += accept ? 1 : 0;
                if (joint_block_proposals[b] == kAdaptBlock) {
                    const double rate = static_cast<double>(joint_block_accepts[b]) /
                                        static_cast<double>(joint_block_proposals[b]);
                    joint_scale[b] *= std::exp(0.6 * (rate - options.target_accept));
                    joint_scale[b] = std::clamp(joint_scale[b], 1e-12, 1e12);
                    joint_block_proposals[b] = 0;
                    joint_block_accepts[b] = 0;
                }
            } else {
                proposals += 1;
                accepts += accept ? 1 : 0;
            }
        }
        if (burnin) continue;
        ++kept;
        for (int v = 0; v < dim; ++v) {
            const bool expv =
                !target.exp_moments.empty() && target.exp_moments[static_cast<std::size_t>(v)];
            const double x = expv ? std::exp(state[v]) : state[v];
            sum[v] += x;
            sumsq[v] += x * x;
            batch_sum[static_cast<std::size_t>(v)] += x;
        }
        if (kept % batch_len == 0) {
            for (int v = 0; v < dim; ++v) {
                batch_means[static_cast<std::size_t>(v)].push_back(
                    batch_sum[static_cast<std::size_t>(v)] / static_cast<double>(batch_len));
                batch_sum[static_cast<std::size_t>(v)] = 0.0;
            }
        }
    }

    McmcResult result;
    result.n_kept = kept;
    result.mean.resize(dim);
    result.variance.resize(dim);
    result.se.resize(dim);
    const double n = static_cast<double>(kept);
    for (int v = 0; v < dim; ++v) {
        const double m = sum[v] / n;
        result.mean[v] = m;
        const double ss = sumsq[v] - n * m * m;
        result.variance[v] = kept > 1 ? std::max(ss, 0.0) / (n - 1) : 0.0;
        const auto& bm = batch_means[static_cast<std::size_t>(v)];
        if (bm.size() > 1) {
            double bmean = 0.0;
            for (double x : bm) bmean += x;
            bmean /= static_cast<double>(bm.size());
            double bvar = 0.0;
            for (double x : bm) bvar += (x - bmean) * (x - bmean);
            bvar /= static_cast<double>(bm.size() - 1);
            result.se[v] = std::sqrt(bvar / static_cast<double>(bm.size()));
        } else {
            result.se[v] = std::sqrt(result.variance[v] / n);
        }
    }
    result.acceptance_rate =
        proposals > 0 ? static_cast<double>(accepts) / static_cast<double>(proposals) : 0.0;
    result.nonconvergence =
        result.acceptance_rate < 0.1 || result.acceptance_rate > 0.6;
    result.final_state = state;
    result.final_scales = scales;
    return result;
}

}  // namespace bayesperf
