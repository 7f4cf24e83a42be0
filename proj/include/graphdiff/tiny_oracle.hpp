#pragma once

#include <vector>

#include "graphdiff/dense.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/noise.hpp"

namespace graphdiff {

// Exact distributions for graphs small enough to enumerate every joint
// labeling (n <= 2, at most 64 joint states). Components are the n node
// variables followed by the unordered pairs (i<j) in row-major order; because
// every component jumps independently, the joint generator is the Kronecker
// sum of the per-component base matrices. Everything here goes through the
// series matrix exponential, independent of the closed forms it checks.
class TinySystem {
 public:
  TinySystem(int n, RateMatrixSpec node_spec, RateMatrixSpec edge_spec,
             NoiseSchedule sched);

  int n() const { return n_; }
  int num_components() const { return static_cast<int>(dims_.size()); }
  int component_dim(int comp) const { return dims_[comp]; }
  long num_states() const { return states_; }
  const NoiseSchedule& schedule() const { return sched_; }
  const Matrix& joint_generator() const { return gen_; }

  long graph_to_state(const CategoricalGraph& g) const;
  CategoricalGraph state_to_graph(long state) const;

  // Product of the per-component stationary distributions.
  std::vector<double> reference() const;

  // q_t over joint states given the data distribution p0 over joint states.
  std::vector<double> marginal_at(const std::vector<double>& p0, double t) const;

  // posterior.at(x_t, x_0) = P(X_0 = x_0 | X_t = x_t); rows for zero-mass
  // states are all zero.
  Matrix posterior_at(const std::vector<double>& p0, double t) const;

  // Exact reverse-time jump rates at time t: rate.at(x, y) for x != y equals
  // q_t(y)/q_t(x) * beta(t) * G(y, x); rows with zero marginal mass are zero.
  Matrix reverse_rates_at(const std::vector<double>& p0, double t) const;

  // What an ideal denoiser would output at (t, state): the per-component
  // marginals of the exact clean posterior. result[comp][value].
  std::vector<std::vector<double>> component_posterior(
      const std::vector<double>& p0, double t, long state) const;

 private:
  void check_dist(const std::vector<double>& p0) const;

  int n_;
  RateMatrixSpec node_spec_;
  RateMatrixSpec edge_spec_;
  NoiseSchedule sched_;
  std::vector<int> dims_;
  std::vector<long> strides_;
  long states_ = 0;
  Matrix gen_;
};

struct TinyOracleResult {
  std::vector<double> marginal;
  Matrix posterior;
  Matrix reverse_rates;
};

TinyOracleResult tiny_joint_oracle(const TinySystem& sys,
                                   const std::vector<double>& data_dist,
                                   double t);

}  // namespace graphdiff
