#include "inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "errors.hpp"
#include "io_util.hpp"
#include "log.hpp"
#include "rng.hpp"

namespace bayesperf {

NaturalGaussian NaturalGaussian::from_moments(double mean, double variance) {
    if (!std::isfinite(mean) || !std::isfinite(variance) || variance <= 0)
        throw NumericError("gaussian moments must be finite with positive variance");
    return {1.0 / variance, mean / variance};
}

std::optional<NaturalGaussian> cavity(const NaturalGaussian& global, const NaturalGaussian& site) {
    const NaturalGaussian out = global - site;
    if (!out.proper()) return std::nullopt;
    return out;
}

NaturalGaussian damped_blend(const NaturalGaussian& old_site, const NaturalGaussian& proposed,
                             double damping) {
    return {damping * proposed.precision + (1.0 - damping) * old_site.precision,
            damping * proposed.precision_mean + (1.0 - damping) * old_site.precision_mean};
}

void EpConfig::check() const {
    if (k_window < 1) throw SchemaError("k_window must be >= 1");
    if (damping <= 0 || damping > 1) throw SchemaError("damping must be in (0, 1]");
    if (convergence_tol <= 0) throw SchemaError("convergence_tol must be > 0");
    if (max_iterations < 1) throw SchemaError("max_iterations must be >= 1");
    if (mcmc_samples < 2) throw SchemaError("mcmc_samples must be >= 2");
    if (mcmc_burnin < 0) throw SchemaError("mcmc_burnin must be >= 0");
    if (proposal_scale <= 0) throw SchemaError("proposal_scale must be > 0");
    if (threads < 1) throw SchemaError("threads must be >= 1");
    if (temporal_rel_sigma <= 0) throw SchemaError("temporal_rel_sigma must be > 0");
    if (single_sample_rel_sigma <= 0) throw SchemaError("single_sample_rel_sigma must be > 0");
    if (min_obs_rel_sigma <= 0) throw SchemaError("min_obs_rel_sigma must be > 0");
}

TiltedMoments tilted_moments(const std::vector<NaturalGaussian>& cavity_naturals,
                             const std::vector<double>& scales,
                             const std::vector<SiteObservation>& observations,
                             const std::vector<SiteFactorRef>& factors,
                             const std::vector<SiteTemporal>& temporals, bool positive_domain,
                             double proposal_scale, const McmcOptions& options,
                             std::vector<double>* warm_state, std::vector<double>* warm_scales) {
    const int dim = static_cast<int>(cavity_naturals.size());
    if (dim == 0) throw NumericError("tilted_moments: empty site");
    if (scales.size() != cavity_naturals.size())
        throw NumericError("tilted_moments: scales size mismatch");
    for (const auto& c : cavity_naturals)
        if (!c.proper()) throw NumericError("tilted_moments: degenerate cavity");

    McmcTarget target;
    target.dim = dim;
    if (positive_domain) target.exp_moments.assign(static_cast<std::size_t>(dim), 1);
    auto value_of = [positive_domain](const std::vector<double>& state, int v) {
        return positive_domain ? std::exp(state[v]) : state[v];
    };

    for (int v = 0; v < dim; ++v) {
        const double prec = cavity_naturals[static_cast<std::size_t>(v)].precision;
        const double pm = cavity_naturals[static_cast<std::size_t>(v)].precision_mean;
        McmcTerm term;
        term.vars = {v};
        term.logd = [value_of, v, prec, pm, positive_domain](const std::vector<double>& state) {
            const double x = value_of(state, v);
            double out = -0.5 * prec * x * x + pm * x;
            if (positive_domain) out += state[v];  // log-space Jacobian
            return out;
        };
        target.terms.push_back(std::move(term));
    }
    for (const auto& obs : observations) {
        McmcTerm term;
        term.vars = {obs.var};
        const int v = obs.var;
        const double mu = obs.mean;
        const double sigma = obs.sigma;
        term.logd = [value_of, v, mu, sigma](const std::vector<double>& state) {
            const double z = (value_of(state, v) - mu) / sigma;
            return -0.5 * z * z;
        };
        target.terms.push_back(std::move(term));
    }
    for (const auto& ref : factors) {
        McmcTerm term;
        for (const auto& [event, v] : ref.binding) {
            (void)event;
            if (std::find(term.vars.begin(), term.vars.end(), v) == term.vars.end())
                term.vars.push_back(v);
        }
        const RelationFactor* factor = ref.factor;
        const auto binding = ref.binding;
        const double fixed_sigma = ref.sigma;
        term.logd = [value_of, factor, binding,
                     fixed_sigma](const std::vector<double>& state) -> double {
            std::map<std::string, double> values;
            for (const auto& [event, v] : binding) values[event] = value_of(state, v);
            try {
                if (fixed_sigma > 0) {
                    const double z =
                        (eval_expr(factor->lhs, values) - eval_expr(factor->rhs, values)) /
                        fixed_sigma;
                    return -0.5 * z * z;
                }
                return evaluate_factor(*factor, values);
            } catch (const Error&) {
                return -std::numeric_limits<double>::infinity();
            }
        };
        target.terms.push_back(std::move(term));
    }
    for (const auto& link : temporals) {
        McmcTerm term;
        term.vars = {link.var_prev, link.var_cur};
        const int p = link.var_prev;
        const int c = link.var_cur;
        const double sigma = link.sigma;
        term.logd = [value_of, p, c, sigma](const std::vector<double>& state) {
            const double z = (value_of(state, c) - value_of(state, p)) / sigma;
            return -0.5 * z * z;
        };
        target.terms.push_back(std::move(term));
    }

    std::vector<double> init, init_scales;
    if (warm_state && warm_state->size() == cavity_naturals.size() && warm_scales &&
        warm_scales->size() == cavity_naturals.size()) {
        init = *warm_state;
        init_scales = *warm_scales;
    } else {
        init.resize(cavity_naturals.size());
        init_scales.resize(cavity_naturals.size());
        for (int v = 0; v < dim; ++v) {
            const auto& c = cavity_naturals[static_cast<std::size_t>(v)];
            const double sd = std::sqrt(c.variance());
            double x0 = c.mean();
            if (positive_domain) {
                x0 = std::max(x0, 1e-3 * scales[static_cast<std::size_t>(v)]);
                init[static_cast<std::size_t>(v)] = std::log(x0);
                init_scales[static_cast<std::size_t>(v)] =
                    std::clamp(proposal_scale * sd / x0, 1e-4, 2.0);
            } else {
                init[static_cast<std::size_t>(v)] = x0;
                init_scales[static_cast<std::size_t>(v)] = std::max(proposal_scale * sd, 1e-12);
            }
        }
    }

    const McmcResult mcmc = run_metropolis(target, std::move(init), std::move(init_scales), options);

    TiltedMoments out;
    out.mean = mcmc.mean;
    out.variance = mcmc.variance;
    out.se = mcmc.se;
    for (int v = 0; v < dim; ++v) {
        const double floor_sd = 1e-8 * scales[static_cast<std::size_t>(v)];
        out.variance[static_cast<std::size_t>(v)] =
            std::max(out.variance[static_cast<std::size_t>(v)], floor_sd * floor_sd);
    }
    out.acceptance_rate = mcmc.acceptance_rate;
    out.warning = mcmc.nonconvergence;
    if (warm_state) *warm_state = mcmc.final_state;
    if (warm_scales) *warm_scales = mcmc.final_scales;
    return out;
}

namespace {

struct VarInfo {
    std::string event;
    long slice = 0;
    NaturalGaussian prior;
    double scale = 1.0;
};

struct SiteState {
    long slice = 0;
    std::vector<int> vars;  // global variable ids in local order
    std::map<int, int> local;
    std::vector<SiteObservation> obs;
    std::vector<SiteFactorRef> factors;
    std::vector<SiteTemporal> temporals;
    std::vector<NaturalGaussian> naturals;
    std::vector<NaturalGaussian> next;
    std::vector<double> last_se;
    std::vector<double> warm_state, warm_scales;
    double damping = 0.8;
    double delta = 0.0;
    bool warned = false;

    int local_of(int var) {
        const auto it = local.find(var);
        if (it != local.end()) return it->second;
        const int l = static_cast<int>(vars.size());
        local.emplace(var, l);
        vars.push_back(var);
        return l;
    }
};

struct Carry {
    double mean = 0.0;
    double variance = 0.0;
    long slice = 0;
};

struct ObsLikelihood {
    double mean = 0.0;
    double sigma = 1.0;
};

ObsLikelihood observation_likelihood(const MeasurementSummary& summary, const EpConfig& config) {
    ObsLikelihood out;
    out.mean = summary.mu;
    const double floor = config.min_obs_rel_sigma * std::max(std::abs(summary.mu), 1.0);
    if (summary.n >= 2) {
        out.sigma = std::max(summary.s / std::sqrt(static_cast<double>(summary.n)), floor);
    } else {
        out.sigma = std::max(config.single_sample_rel_sigma * std::max(std::abs(summary.mu), 1.0),
                             floor);
    }
    return out;
}

void process_window(const FactorGraph& graph, const SampleBatch& batch, const EpConfig& config,
                    long chain_start, long window_start, long window_end,
                    std::map<std::string, Carry>& carry, std::vector<EventPosterior>& out) {
    // Pooled observation summaries per (slice, event).
    std::map<long, std::map<std::string, ObsLikelihood>> observed;
    long n_obs = 0;
    for (long t = window_start; t < window_end; ++t) {
        const auto slice_it = batch.by_slice.find(t);
        if (slice_it == batch.by_slice.end()) continue;
        for (const auto& [event, indices] : slice_it->second) {
            if (indices.empty()) continue;
            if (!graph.has_variable(event)) throw UnknownEventError(event);
            std::vector<Sample> samples;
            samples.reserve(indices.size());
            for (std::size_t i : indices) samples.push_back(batch.samples[i]);
            observed[t][event] = observation_likelihood(summarize(samples), config);
            ++n_obs;
        }
    }
    if (n_obs == 0)
        throw NoObservationsError("no samples in slices [" + std::to_string(window_start) + ", " +
                                  std::to_string(window_end) + ")");

    // Active factors per slice and the per-slice variable sets they induce.
    std::map<long, std::vector<std::size_t>> active;
    std::map<long, std::set<std::string>> base;
    for (long t = window_start; t < window_end; ++t) {
        const auto it = observed.find(t);
        if (it == observed.end()) continue;
        auto& events = base[t];
        for (const auto& [event, like] : it->second) {
            (void)like;
            events.insert(event);
        }
        for (std::size_t fi = 0; fi < graph.factors().size(); ++fi) {
            const auto& scope = graph.scope(fi);
            bool touches = false;
            for (const auto& e : scope)
                if (it->second.count(e)) {
                    touches = true;
                    break;
                }
            if (!touches) continue;
            active[t].push_back(fi);
            events.insert(scope.begin(), scope.end());
        }
    }

    // Prior centers: earliest observation in the window, then relation
    // propagation for events only reachable through factors.
    std::map<std::string, double> centers;
    for (long t = window_start; t < window_end; ++t) {
        const auto it = observed.find(t);
        if (it == observed.end()) continue;
        for (const auto& [event, like] : it->second)
            if (!centers.count(event)) centers[event] = like.mean;
    }
    RelationSet relation_set;
    relation_set.factors = graph.factors();
    centers = close_over_relations(relation_set, std::move(centers));
    double widest = 1.0;
    for (const auto& [event, c] : centers) {
        (void)event;
        widest = std::max(widest, std::abs(c));
    }

    auto center_of = [&](const std::string& event) {
        const auto it = centers.find(event);
        return it == centers.end() ? 0.0 : it->second;
    };
    auto scale_of = [&](const std::string& event) {
        const auto it = centers.find(event);
        return it == centers.end() ? widest : std::max(std::abs(it->second), 1.0);
    };

    // Variables.
    std::vector<VarInfo> vars;
    std::map<long, std::map<std::string, int>> var_id;
    std::set<std::string> carried;
    for (auto& [t, events] : base) {
        for (const auto& event : events) {
            VarInfo v;
            v.event = event;
            v.slice = t;
            v.scale = scale_of(event);
            const auto carry_it = carry.find(event);
            if (carry_it != carry.end() && !carried.count(event)) {
                // Chain the previous window's posterior forward, widened by
                // the smoothness sigma per elapsed slice.
                carried.insert(event);
                const double step = config.temporal_rel_sigma * v.scale;
                const double gap = static_cast<double>(t - carry_it->second.slice);
                v.prior = NaturalGaussian::from_moments(
                    carry_it->second.mean, carry_it->second.variance + gap * step * step);
            } else {
                const double center = center_of(event);
                const double sd = 10.0 * std::max(std::abs(center), centers.count(event) ? 1.0 : widest);
                v.prior = NaturalGaussian::from_moments(center, sd * sd);
            }
            var_id[t][event] = static_cast<int>(vars.size());
            vars.push_back(std::move(v));
        }
    }

    // Sites: one per slice with content.
    std::vector<SiteState> sites;
    for (auto& [t, events] : base) {
        SiteState site;
        site.slice = t;
        site.damping = config.damping;
        const auto obs_it = observed.find(t);
        for (const auto& event : events) {
            const int v = var_id[t][event];
            const int l = site.local_of(v);
            if (obs_it != observed.end()) {
                const auto like = obs_it->second.find(event);
                if (like != obs_it->second.end())
                    site.obs.push_back({l, like->second.mean, like->second.sigma});
            }
        }
        const auto fac_it = active.find(t);
        if (fac_it != active.end()) {
            for (std::size_t fi : fac_it->second) {
                SiteFactorRef ref;
                ref.factor = &graph.factors()[fi];
                for (const auto& event : graph.scope(fi))
                    ref.binding[event] = site.local_of(var_id[t][event]);
                site.factors.push_back(std::move(ref));
            }
        }
        if (config.temporal_smoothing) {
            const auto prev = base.find(t - 1);
            if (prev != base.end()) {
                for (const auto& event : events) {
                    if (!prev->second.count(event)) continue;
                    const double sigma = config.temporal_rel_sigma * scale_of(event);
                    site.temporals.push_back({site.local_of(var_id[t - 1][event]),
                                              site.local_of(var_id[t][event]), sigma});
                }
            }
        }
        site.naturals.assign(site.vars.size(), NaturalGaussian{});
        site.next = site.naturals;
        site.last_se.assign(site.vars.size(), 0.0);
        sites.push_back(std::move(site));
    }

    // Global approximation: prior plus all sites, refreshed synchronously so
    // results do not depend on site visiting order or thread count.
    std::vector<NaturalGaussian> global(vars.size());
    auto recompute_global = [&]() {
        for (std::size_t v = 0; v < vars.size(); ++v) global[v] = vars[v].prior;
        for (const auto& site : sites)
            for (std::size_t l = 0; l < site.vars.size(); ++l)
                global[static_cast<std::size_t>(site.vars[l])] =
                    global[static_cast<std::size_t>(site.vars[l])] + site.naturals[l];
    };
    recompute_global();

    McmcOptions mcmc_options;
    mcmc_options.n_samples = config.mcmc_samples;
    mcmc_options.n_burnin = config.mcmc_burnin;

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        const std::vector<NaturalGaussian> snapshot = global;

        auto update_site = [&](SiteState& site, int site_ordinal) {
            site.delta = 0.0;
            site.next = site.naturals;

            std::vector<NaturalGaussian> cav(site.vars.size());
            for (std::size_t l = 0; l < site.vars.size(); ++l) {
                const auto c = cavity(snapshot[static_cast<std::size_t>(site.vars[l])],
                                      site.naturals[l]);
                if (!c) {
                    site.damping = std::max(site.damping * 0.5, 1e-3);
                    return;  // degenerate cavity: skip this round
                }
                cav[l] = *c;
            }

            std::vector<double> scales(site.vars.size());
            for (std::size_t l = 0; l < site.vars.size(); ++l)
                scales[l] = vars[static_cast<std::size_t>(site.vars[l])].scale;

            for (auto& ref : site.factors) {
                if (ref.factor->slack_absolute) {
                    ref.sigma = ref.factor->slack_sigma;
                    continue;
                }
                std::map<std::string, double> at;
                for (const auto& [event, l] : ref.binding)
                    at[event] = cav[static_cast<std::size_t>(l)].mean();
                try {
                    const double lv = eval_expr(ref.factor->lhs, at);
                    const double rv = eval_expr(ref.factor->rhs, at);
                    ref.sigma = ref.factor->slack_sigma *
                                std::max({std::fabs(lv), std::fabs(rv), 1.0});
                } catch (const Error&) {
                    ref.sigma = 0.0;  // fall back to the value-dependent sigma
                }
            }

            McmcOptions options = mcmc_options;
            options.seed = mix_seed(config.seed, static_cast<std::uint64_t>(window_start - chain_start),
                                    static_cast<std::uint64_t>(site.slice - window_start),
                                    static_cast<std::uint64_t>(iter));
            const TiltedMoments moments =
                tilted_moments(cav, scales, site.obs, site.factors, site.temporals,
                               config.positive_domain, config.proposal_scale, options,
                               &site.warm_state, &site.warm_scales);
            (void)site_ordinal;

            site.warned = moments.warning;
            for (std::size_t l = 0; l < site.vars.size(); ++l) {
                site.last_se[l] = moments.se[l];
                const NaturalGaussian tilted =
                    NaturalGaussian::from_moments(moments.mean[l], moments.variance[l]);
                const NaturalGaussian proposed = tilted - cav[l];
                const NaturalGaussian blended =
                    damped_blend(site.naturals[l], proposed, site.damping);
                const double scale = scales[l];
                site.delta = std::max(
                    site.delta, std::abs(blended.precision - site.naturals[l].precision) * scale *
                                    scale);
                site.delta = std::max(site.delta,
                                      std::abs(blended.precision_mean -
                                               site.naturals[l].precision_mean) *
                                          scale);
                site.next[l] = blended;
            }
        };

        if (config.threads > 1 && sites.size() > 1) {
            std::vector<std::thread> pool;
            const int n_threads = std::min<int>(config.threads, static_cast<int>(sites.size()));
            for (int w = 0; w < n_threads; ++w) {
                pool.emplace_back([&, w]() {
                    for (std::size_t s = static_cast<std::size_t>(w); s < sites.size();
                         s += static_cast<std::size_t>(n_threads))
                        update_site(sites[s], static_cast<int>(s));
                });
            }
            for (auto& th : pool) th.join();
        } else {
            for (std::size_t s = 0; s < sites.size(); ++s)
                update_site(sites[s], static_cast<int>(s));
        }

        // Accept the synchronous round, rolling back sites that would make
        // the global approximation improper.
        for (int guard = 0; guard < 64; ++guard) {
            std::vector<NaturalGaussian> candidate(vars.size());
            for (std::size_t v = 0; v < vars.size(); ++v) candidate[v] = vars[v].prior;
            for (const auto& site : sites)
                for (std::size_t l = 0; l < site.vars.size(); ++l)
                    candidate[static_cast<std::size_t>(site.vars[l])] =
                        candidate[static_cast<std::size_t>(site.vars[l])] + site.next[l];
            std::set<int> improper;
            for (std::size_t v = 0; v < vars.size(); ++v)
                if (!candidate[v].proper()) improper.insert(static_cast<int>(v));
            if (improper.empty()) {
                global = std::move(candidate);
                break;
            }
            bool reverted = false;
            for (auto& site : sites) {
                bool touches = false;
                for (int v : site.vars)
                    if (improper.count(v)) {
                        touches = true;
                        break;
                    }
                if (!touches) continue;
                for (std::size_t l = 0; l < site.vars.size(); ++l) {
                    if (site.next[l].precision != site.naturals[l].precision ||
                        site.next[l].precision_mean != site.naturals[l].precision_mean)
                        reverted = true;
                    site.next[l] = site.naturals[l];
                }
                site.damping = std::max(site.damping * 0.5, 1e-3);
                site.delta = 0.0;
            }
            if (!reverted) {
                recompute_global();
                break;
            }
        }

        double max_delta = 0.0;
        for (auto& site : sites) {
            site.naturals = site.next;
            max_delta = std::max(max_delta, site.delta);
        }
        if (max_delta < config.convergence_tol) break;
    }

    // Posteriors, slice warnings, and the carry into the next window.
    std::map<long, bool> slice_warned;
    std::vector<std::vector<double>> var_se(vars.size());
    for (const auto& site : sites) {
        slice_warned[site.slice] = slice_warned[site.slice] || site.warned;
        for (std::size_t l = 0; l < site.vars.size(); ++l)
            var_se[static_cast<std::size_t>(site.vars[l])].push_back(site.last_se[l]);
    }
    for (std::size_t v = 0; v < vars.size(); ++v) {
        EventPosterior p;
        p.slice = vars[v].slice;
        p.event = vars[v].event;
        p.mean = global[v].mean();
        p.variance = global[v].variance();
        p.mle = p.mean;
        p.n_mcmc_samples = config.mcmc_samples;
        if (slice_warned.count(vars[v].slice) && slice_warned.at(vars[v].slice))
            p.warnings.push_back("McmcNonconvergence");
        for (double se : var_se[v]) p.mc_se = std::max(p.mc_se, se);
        out.push_back(std::move(p));
    }
    std::map<std::string, Carry> updated;
    for (std::size_t v = 0; v < vars.size(); ++v) {
        const auto it = updated.find(vars[v].event);
        if (it == updated.end() || vars[v].slice > it->second.slice)
            updated[vars[v].event] = {global[v].mean(), global[v].variance(), vars[v].slice};
    }
    for (auto& [event, c] : updated) carry[event] = c;
}

}  // namespace

std::vector<EventPosterior> run_inference(const FactorGraph& graph, const Schedule& schedule,
                                          const SampleBatch& batch, const EpConfig& config) {
    config.check();
    if (schedule.slices.empty()) throw InvalidScheduleError("schedule has no slices");
    if (batch.empty()) throw NoObservationsError("sample batch is empty");

    const long horizon =
        std::min<long>(static_cast<long>(schedule.slices.size()), batch.max_slice() + 1);

    std::vector<EventPosterior> out;
    long chain_start = 0;
    while (chain_start < horizon) {
        long chain_end = chain_start + 1;
        while (chain_end < horizon && !schedule.slices[static_cast<std::size_t>(chain_end)].break_before)
            ++chain_end;
        std::map<std::string, Carry> carry;
        for (long w = chain_start; w < chain_end; w += config.k_window)
            process_window(graph, batch, config, chain_start, w,
                           std::min<long>(w + config.k_window, chain_end), carry, out);
        chain_start = chain_end;
    }
    std::sort(out.begin(), out.end(), [](const EventPosterior& a, const EventPosterior& b) {
        if (a.slice != b.slice) return a.slice < b.slice;
        return a.event < b.event;
    });
    return out;
}

double profile_slack_multiplier(const EventCatalog& catalog, const RelationSet& relations,
                                const Schedule& schedule, const SampleBatch& batch,
                                const EpConfig& config, const std::vector<double>& grid) {
    if (grid.empty()) throw SchemaError("slack multiplier grid is empty");
    double best = grid.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (const double multiplier : grid) {
        if (multiplier <= 0) throw SchemaError("slack multipliers must be > 0");
        RelationSet scaled = relations;
        for (auto& factor : scaled.factors) factor.slack_sigma *= multiplier;
        const FactorGraph graph(catalog, scaled);
        const auto posteriors = run_inference(graph, schedule, batch, config);

        std::map<std::pair<long, std::string>, const EventPosterior*> by_key;
        for (const auto& p : posteriors) by_key[{p.slice, p.event}] = &p;
        double score = 0.0;
        for (const auto& [slice, events] : batch.by_slice) {
            for (const auto& [event, indices] : events) {
                if (indices.empty()) continue;
                std::vector<Sample> samples;
                for (std::size_t i : indices) samples.push_back(batch.samples[i]);
                const auto like = observation_likelihood(summarize(samples), config);
                const auto it = by_key.find({slice, event});
                if (it == by_key.end()) continue;
                const double var = it->second->variance + like.sigma * like.sigma;
                const double z = like.mean - it->second->mean;
                score += -0.5 * (std::log(2.0 * M_PI * var) + z * z / var);
            }
        }
        BP_LOG_DEBUG("slack multiplier ", multiplier, " score ", score);
        if (score > best_score + 1e-12) {
            best_score = score;
            best = multiplier;
        }
    }
    return best;
}

const char* const kPosteriorCsvHeader = "slice,event,mean,variance,mle,n_samples,warnings";

std::string posteriors_to_csv(const std::vector<EventPosterior>& posteriors) {
    std::ostringstream out;
    out << kPosteriorCsvHeader << "\n";
    for (const auto& p : posteriors) {
        out << p.slice << "," << p.event << "," << format_double(p.mean) << ","
            << format_double(p.variance) << "," << format_double(p.mle) << ","
            << p.n_mcmc_samples << ",";
        for (std::size_t i = 0; i < p.warnings.size(); ++i) {
            if (i) out << ";";
            out << p.warnings[i];
        }
        out << "\n";
    }
    return out.str();
}

std::vector<EventPosterior> posteriors_from_csv(const std::string& content) {
    const auto lines = split_lines(content);
    if (lines.empty() || lines[0] != kPosteriorCsvHeader)
        throw ParseError("posterior csv must start with header '" +
                         std::string(kPosteriorCsvHeader) + "'");
    std::vector<EventPosterior> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_csv_line(lines[i]);
        if (fields.size() != 7)
            throw ParseError("posterior csv line " + std::to_string(i + 1) +
                             ": expected 7 fields");
        EventPosterior p;
        p.slice = parse_long(fields[0]);
        p.event = fields[1];
        p.mean = parse_double(fields[2]);
        p.variance = parse_double(fields[3]);
        p.mle = parse_double(fields[4]);
        p.n_mcmc_samples = parse_long(fields[5]);
        if (!fields[6].empty()) {
            std::stringstream ss(fields[6]);
            std::string w;
            while (std::getline(ss, w, ';'))
                if (!w.empty()) p.warnings.push_back(w);
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<EventPosterior> load_posteriors(const std::string& path) {
    return posteriors_from_csv(read_file(path));
}

void save_posteriors(const std::vector<EventPosterior>& posteriors, const std::string& path) {
    write_file(path, posteriors_to_csv(posteriors));
}

nlohmann::json posteriors_to_json(const std::vector<EventPosterior>& posteriors) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : posteriors) {
        arr.push_back({{"slice", p.slice},
                       {"event", p.event},
                       {"mean", p.mean},
                       {"variance", p.variance},
                       {"mle", p.mle},
                       {"n_samples", p.n_mcmc_samples},
                       {"warnings", p.warnings}});
    }
    return arr;
}

std::vector<EventPosterior> posteriors_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw SchemaError("posterior json must be an array");
    std::vector<EventPosterior> out;
    for (const auto& jp : j) {
        EventPosterior p;
        p.slice = jp.at("slice").get<long>();
        p.event = jp.at("event").get<std::string>();
        p.mean = jp.at("mean").get<double>();
        p.variance = jp.at("variance").get<double>();
        p.mle = jp.at("mle").get<double>();
        p.n_mcmc_samples = jp.value("n_samples", 0L);
        if (jp.contains("warnings"))
            for (const auto& w : jp["warnings"]) p.warnings.push_back(w.get<std::string>());
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace bayesperf
