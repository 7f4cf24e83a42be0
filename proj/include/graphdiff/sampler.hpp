#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "graphdiff/backbone.hpp"
#include "graphdiff/dense.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/rng.hpp"

namespace graphdiff {

// Clean-type posterior supplied to the reverse process. Usually a trained
// model, but tests substitute the exact posterior of a small joint system.
using PosteriorFn =
    std::function<CleanPrediction(const CategoricalGraph&, double)>;

PosteriorFn model_posterior(const DenoiserModel& model);

struct SamplerConfig {
  int steps = 100;        // number of leap intervals K; each spans horizon/K
  int num_samples = 1;
  int fixed_nodes = 0;    // node count when `sizes` is empty
  SizeDistribution sizes; // preferred size source when non-empty
  std::uint64_t seed = 0;
};

struct ReverseRates {
  Matrix nodes;  // n x b, entry (i,s): jump rate of node i to state s
  Matrix edges;  // pair_count(n) x (a+1), same layout as edge posteriors
};

// Reverse-time jump rates for every component of g_t given the posterior over
// clean types. For node i in state f, the rate toward s != f is
//   beta(t) * R(s, f) * sum_f0 [ q_c(s | f0) / q_c(f | f0) ] * posterior_i[f0]
// with c the accumulated rate over [0, t]; pairs are handled the same way
// under the edge spec. Rates to the current state are 0. The ratio's
// denominator is floored at 1e-30, unreachable for any accumulated rate the
// schedule can produce at double precision.
ReverseRates reverse_rates(const CategoricalGraph& g_t, double t,
                           const CleanPrediction& posterior,
                           const RateMatrixSpec& node_spec,
                           const RateMatrixSpec& edge_spec,
                           const NoiseSchedule& sched);

// One leap of length tau ending at t - tau. Rates are computed once, at the
// right endpoint t. Every component draws an independent Poisson count for
// each candidate target; it moves only when the total count across targets is
// exactly one, and stays put otherwise. Draw order: nodes by index, then
// pairs (i<j) row-major, targets in state order skipping the current state.
CategoricalGraph tau_leap_step(const CategoricalGraph& g_t, double t,
                               double tau, const PosteriorFn& posterior,
                               const RateMatrixSpec& node_spec,
                               const RateMatrixSpec& edge_spec,
                               const NoiseSchedule& sched, Rng& rng);

// Full reverse runs: initialize each chain from the stationary reference,
// then take `steps` leaps from t = T down to 0. Chain k draws from the child
// stream child(k) of cfg.seed, so results are independent of generation
// order. Deterministic given the config.
std::vector<CategoricalGraph> generate(const PosteriorFn& posterior,
                                       const RateMatrixSpec& node_spec,
                                       const RateMatrixSpec& edge_spec,
                                       const NoiseSchedule& sched,
                                       const SamplerConfig& cfg);

// Gold standard on joint systems small enough to enumerate (<= 64 states):
// simulates the exact time-inhomogeneous reverse CTMC by thinning. Candidate
// event times come from per-state upper bounds precomputed on a geometric
// time grid; accepted events jump by the exact reverse rates at that instant.
// Starts from the exact corrupted marginal at t = T and returns the empirical
// distribution over joint states at t = 0.
std::vector<double> exact_reverse_tiny(int n, const std::vector<double>& data_dist,
                                       const RateMatrixSpec& node_spec,
                                       const RateMatrixSpec& edge_spec,
                                       const NoiseSchedule& sched,
                                       long num_samples, Rng& rng);

}  // namespace graphdiff
