#pragma once

#include <vector>

#include "graphdiff/dense.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/rng.hpp"

namespace graphdiff {

enum class RefKind { kUniform, kMarginal };

// Base rate matrix description for one categorical variable. The generator is
// time independent; the schedule contributes a scalar rate beta(t).
struct RateMatrixSpec {
  RefKind kind = RefKind::kUniform;
  int dim = 0;
  std::vector<double> marginal;  // empty for uniform

  static RateMatrixSpec uniform(int dim);
  // m must be a probability vector (entries >= 0, sum 1 within 1e-12).
  static RateMatrixSpec make_marginal(std::vector<double> m);

  // The distribution the corruption converges to.
  std::vector<double> stationary() const;
};

// beta(t) = alpha * gamma^t * ln(gamma); integral over [s,t] in closed form.
struct NoiseSchedule {
  double alpha = 1.0;
  double gamma = 5.0;
  double horizon = 1.0;  // T

  NoiseSchedule() = default;
  NoiseSchedule(double a, double g, double T);

  double beta(double t) const;
};

// Generator with rows summing to zero:
//   uniform:  ones - dim * I
//   marginal: ones * m^T - I
Matrix base_rate_matrix(const RateMatrixSpec& spec);

// Integral of beta over [s,t] = alpha * (gamma^t - gamma^s). Requires s <= t.
double cumulative_rate(const NoiseSchedule& sched, double s, double t);

// Closed-form exp(c * R); entry (u,v) is the probability of being in state v
// at accumulated rate c given start state u.
Matrix transition_matrix(const RateMatrixSpec& spec, double c);

// Truncated Taylor series for exp(c * R), the reference the closed forms are
// tested against. Scaling-and-squaring keeps every term's magnitude at or
// below one so the sum never cancels catastrophically; terms are added until
// the last one drops below 1e-16 in max-abs.
Matrix series_matrix_exp(const Matrix& r, double c);

// Draws G_t ~ q_{t|0}(. | g0): every node and unordered pair jumps
// independently under its transition matrix. Nodes are sampled in index
// order, then pairs (i<j) row-major, so a seeded rng reproduces the draw.
CategoricalGraph corrupt_graph(const CategoricalGraph& g0, double t,
                               const RateMatrixSpec& node_spec,
                               const RateMatrixSpec& edge_spec,
                               const NoiseSchedule& sched, Rng& rng);

}  // namespace graphdiff
