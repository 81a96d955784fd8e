#pragma once

// Independent reference implementations used to check the library. Everything
// here is deliberately written with different algorithms than the production
// code: recursive DTW instead of the iterative table, quadrature instead of
// closed forms, exhaustive search instead of BFS layering, dense linear
// algebra instead of message passing.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "event_model.hpp"

namespace testoracle {

// Minimal-cost monotone alignment of two series under L1 local cost,
// memoized recursion.
double dtw_distance(const std::vector<double>& a, const std::vector<double>& b);

// Student-t CDF/quantile by numerical integration of the density and
// bisection. Quantile valid for p in (cdf(-200), cdf(200)).
double t_cdf(double dof, double x);
double t_quantile(double dof, double p);

// Gaussian log-density terms of the form -((sum_i c_i x_i + offset) / sigma)^2 / 2.
struct LinearTerm {
    std::vector<std::pair<int, double>> coeffs;
    double offset = 0.0;
    double sigma = 1.0;
};

struct GaussianMarginals {
    std::vector<double> mean;
    std::vector<double> variance;
};

// Exact marginal means/variances of the joint Gaussian defined by the terms,
// via dense precision-matrix assembly and factorization.
GaussianMarginals gaussian_marginals(int dim, const std::vector<LinearTerm>& terms);

// Per-dimension moments of exp(logf) over an axis-aligned box, midpoint grid.
// Supports 1 to 3 dimensions.
struct GridMoments {
    std::vector<double> mean;
    std::vector<double> variance;
};
GridMoments grid_moments(const std::vector<double>& lo, const std::vector<double>& hi,
                         int points_per_dim,
                         const std::function<double(const std::vector<double>&)>& logf);

// Markov blanket of the targets derived from first principles: discretize
// every variable to {0, 1}, attach random positive potentials to the factor
// scopes, and test conditional independence of each candidate variable from
// the targets given all remaining variables, on the normalized joint.
std::set<std::string> blanket_by_conditional_independence(
    const std::vector<std::string>& vars, const std::vector<std::set<std::string>>& scopes,
    const std::set<std::string>& targets, std::uint64_t seed);

// Co-scope union, directly from the scope list.
std::set<std::string> blanket_direct(const std::vector<std::set<std::string>>& scopes,
                                     const std::set<std::string>& targets);

// Closed neighborhoods intersect.
bool sets_overlap(const std::vector<std::set<std::string>>& scopes,
                  const std::set<std::string>& a, const std::set<std::string>& b);

// Shared event, or some factor scope touching both sets.
bool sets_chain_linked(const std::vector<std::set<std::string>>& scopes,
                       const std::set<std::string>& a, const std::set<std::string>& b);

// Whether the event set admits a valid counter assignment, by exhaustive
// backtracking over allowed counters (capacity and exclusions included).
bool placeable_set(const bayesperf::EventCatalog& catalog, const std::set<std::string>& events);

// Minimum number of intermediate slices needed to build a dependency chain
// from one configuration's events to the next: exhaustive breadth-first
// search over all valid intermediate event sets, where a slice extends the
// chain through events equal or co-scoped to the previously reached ones and
// information spreads only across co-scoped events within a slice. Returns 0
// when the pair is already linked, nullopt when no chain exists.
std::optional<int> min_insertions(const bayesperf::EventCatalog& catalog,
                                  const std::vector<std::set<std::string>>& scopes,
                                  const std::set<std::string>& from,
                                  const std::set<std::string>& to);

// Hop count of the shortest variable-to-variable path whose intermediate
// events are placeable (endpoints exempt); plain breadth-first search.
std::optional<int> path_hops(const bayesperf::EventCatalog& catalog,
                             const std::vector<std::set<std::string>>& scopes,
                             const std::string& from, const std::string& to);

}  // namespace testoracle
