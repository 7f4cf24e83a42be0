#include "graphdiff/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "graphdiff/tiny_oracle.hpp"

namespace graphdiff {

namespace {

constexpr double kDenFloor = 1e-30;

// Thinning discretization: geometric segments T, T/2, ..., T * 2^-40. Below
// the last boundary the remaining jump intensity integrates to O(2^-40) and
// the simulation stops.
constexpr int kNumSegments = 40;
constexpr int kGridPoints = 9;
constexpr double kBoundSafety = 2.0;

void check_posterior_shape(const CategoricalGraph& g,
                           const CleanPrediction& posterior,
                           const RateMatrixSpec& node_spec,
                           const RateMatrixSpec& edge_spec) {
  const std::size_t n = static_cast<std::size_t>(g.n);
  if (posterior.n != n || posterior.node_classes != node_spec.dim ||
      posterior.edge_classes != edge_spec.dim) {
    throw std::invalid_argument("reverse_rates: posterior shape mismatch");
  }
  const std::size_t pairs = pair_count(n);
  if (posterior.node_probs.size() != n * static_cast<std::size_t>(node_spec.dim) ||
      posterior.edge_probs.size() != pairs * static_cast<std::size_t>(edge_spec.dim)) {
    throw std::invalid_argument("reverse_rates: posterior storage mismatch");
  }
}

// rate(cur -> s) = beta * R(s, cur) * sum_f0 q(s|f0)/q(cur|f0) * w[f0],
// written into row `row` of `out` with out(row, cur) = 0.
void component_rates(Matrix& out, std::size_t row, int cur, const double* w,
                     const Matrix& base, const Matrix& trans, double beta) {
  const std::size_t dim = base.rows;
  for (std::size_t s = 0; s < dim; ++s) {
    if (static_cast<int>(s) == cur) continue;
    const double base_rate = base.at(s, static_cast<std::size_t>(cur));
    if (base_rate <= 0.0) continue;
    double ratio_sum = 0.0;
    for (std::size_t f0 = 0; f0 < dim; ++f0) {
      const double weight = w[f0];
      if (weight == 0.0) continue;
      const double den =
          std::max(trans.at(f0, static_cast<std::size_t>(cur)), kDenFloor);
      ratio_sum += trans.at(f0, s) / den * weight;
    }
    out.at(row, s) = beta * base_rate * ratio_sum;
  }
}

}  // namespace

PosteriorFn model_posterior(const DenoiserModel& model) {
  const DenoiserModel* m = &model;
  return [m](const CategoricalGraph& g, double t) {
    return m->predict_clean(g, t);
  };
}

ReverseRates reverse_rates(const CategoricalGraph& g_t, double t,
                           const CleanPrediction& posterior,
                           const RateMatrixSpec& node_spec,
                           const RateMatrixSpec& edge_spec,
                           const NoiseSchedule& sched) {
  validate_graph(g_t, node_spec.dim, edge_spec.dim - 1);
  if (!(t > 0.0) || t > sched.horizon) {
    throw std::invalid_argument(
        "reverse_rates: t must lie in (0, horizon], got " + std::to_string(t));
  }
  check_posterior_shape(g_t, posterior, node_spec, edge_spec);

  const double beta = sched.beta(t);
  const double c = cumulative_rate(sched, 0.0, t);
  const Matrix node_base = base_rate_matrix(node_spec);
  const Matrix edge_base = base_rate_matrix(edge_spec);
  const Matrix node_trans = transition_matrix(node_spec, c);
  const Matrix edge_trans = transition_matrix(edge_spec, c);

  const std::size_t n = static_cast<std::size_t>(g_t.n);
  ReverseRates rates;
  rates.nodes = Matrix(n, static_cast<std::size_t>(node_spec.dim));
  rates.edges =
      Matrix(pair_count(n), static_cast<std::size_t>(edge_spec.dim));

  for (std::size_t i = 0; i < n; ++i) {
    component_rates(rates.nodes, i, g_t.node_types[i], posterior.node_row(i),
                    node_base, node_trans, beta);
  }
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      component_rates(rates.edges, p,
                      g_t.edge(static_cast<int>(i), static_cast<int>(j)),
                      posterior.edge_row(i, j), edge_base, edge_trans, beta);
    }
  }
  return rates;
}

CategoricalGraph tau_leap_step(const CategoricalGraph& g_t, double t,
                               double tau, const PosteriorFn& posterior,
                               const RateMatrixSpec& node_spec,
                               const RateMatrixSpec& edge_spec,
                               const NoiseSchedule& sched, Rng& rng) {
  if (tau < 0.0) throw std::invalid_argument("tau_leap_step: negative tau");
  if (tau > t) {
    throw std::invalid_argument("tau_leap_step: leap of " + std::to_string(tau) +
                                " exceeds remaining time " + std::to_string(t));
  }
  const CleanPrediction pred = posterior(g_t, t);
  const ReverseRates rates =
      reverse_rates(g_t, t, pred, node_spec, edge_spec, sched);

  // A component moves only when its total jump count over all candidate
  // targets is exactly one; simultaneous jumps cancel the move.
  const auto leap_row = [&](const Matrix& m, std::size_t row, int cur) {
    long total = 0;
    int pick = cur;
    for (std::size_t s = 0; s < m.cols; ++s) {
      if (static_cast<int>(s) == cur) continue;
      const double mean = tau * m.at(row, s);
      if (mean <= 0.0) continue;
      const long jumps = rng.poisson(mean);
      if (jumps > 0) {
        total += jumps;
        if (jumps == 1) pick = static_cast<int>(s);
      }
    }
    return total == 1 ? pick : cur;
  };

  CategoricalGraph out = g_t;
  const std::size_t n = static_cast<std::size_t>(g_t.n);
  for (std::size_t i = 0; i < n; ++i) {
    out.node_types[i] = leap_row(rates.nodes, i, g_t.node_types[i]);
  }
  std::size_t p = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j, ++p) {
      const int cur = g_t.edge(static_cast<int>(i), static_cast<int>(j));
      out.set_edge(static_cast<int>(i), static_cast<int>(j),
                   leap_row(rates.edges, p, cur));
    }
  }
  return out;
}

std::vector<CategoricalGraph> generate(const PosteriorFn& posterior,
                                       const RateMatrixSpec& node_spec,
                                       const RateMatrixSpec& edge_spec,
                                       const NoiseSchedule& sched,
                                       const SamplerConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("generate: steps must be >= 1");
  if (cfg.num_samples < 0) {
    throw std::invalid_argument("generate: negative sample count");
  }
  if (cfg.sizes.empty() && cfg.fixed_nodes < 1) {
    throw std::invalid_argument(
        "generate: need a size distribution or a fixed node count >= 1");
  }

  const std::vector<double> node_ref = node_spec.stationary();
  const std::vector<double> edge_ref = edge_spec.stationary();
  const int K = cfg.steps;
  const double T = sched.horizon;
  const Rng root(cfg.seed);

  std::vector<CategoricalGraph> out;
  out.reserve(static_cast<std::size_t>(cfg.num_samples));
  for (int sample = 0; sample < cfg.num_samples; ++sample) {
    Rng chain = root.child(static_cast<std::uint64_t>(sample));
    const int n =
        cfg.sizes.empty() ? cfg.fixed_nodes : cfg.sizes.sample(chain);

    CategoricalGraph g(n);
    for (int i = 0; i < n; ++i) g.node_types[i] = chain.categorical(node_ref);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        g.set_edge(i, j, chain.categorical(edge_ref));
      }
    }

    // Interval endpoints T*(K-k)/K land on 0 exactly; rates use the right
    // endpoint of each interval.
    for (int k = 1; k <= K; ++k) {
      const double hi = T * (static_cast<double>(K - k + 1) / K);
      const double lo = T * (static_cast<double>(K - k) / K);
      g = tau_leap_step(g, hi, hi - lo, posterior, node_spec, edge_spec, sched,
                        chain);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<double> exact_reverse_tiny(int n, const std::vector<double>& data_dist,
                                       const RateMatrixSpec& node_spec,
                                       const RateMatrixSpec& edge_spec,
                                       const NoiseSchedule& sched,
                                       long num_samples, Rng& rng) {
  const TinySystem sys(n, node_spec, edge_spec, sched);
  const long states = sys.num_states();
  if (states > 64) {
    throw std::invalid_argument(
        "exact_reverse_tiny: joint state space exceeds 64 states");
  }
  if (num_samples < 1) {
    throw std::invalid_argument("exact_reverse_tiny: need at least one sample");
  }
  const std::size_t S = static_cast<std::size_t>(states);
  const double T = sched.horizon;

  const auto seg_hi = [T](int k) { return T * std::ldexp(1.0, -k); };
  const double t_floor = seg_hi(kNumSegments);

  // Per-segment, per-state exit-rate bounds: the exact total exit rate varies
  // smoothly over a half-octave of time, so a coarse grid maximum times a
  // safety factor dominates it.
  std::vector<std::vector<double>> bound(
      kNumSegments, std::vector<double>(S, 0.0));
  for (int k = 0; k < kNumSegments; ++k) {
    const double hi = seg_hi(k);
    const double lo = seg_hi(k + 1);
    for (int gpt = 0; gpt < kGridPoints; ++gpt) {
      const double tg = lo + (hi - lo) * gpt / (kGridPoints - 1);
      const Matrix rates = sys.reverse_rates_at(data_dist, tg);
      for (std::size_t x = 0; x < S; ++x) {
        double exit = 0.0;
        for (std::size_t y = 0; y < S; ++y) {
          if (y != x) exit += rates.at(x, y);
        }
        bound[k][x] = std::max(bound[k][x], exit);
      }
    }
    for (std::size_t x = 0; x < S; ++x) bound[k][x] *= kBoundSafety;
  }

  const std::vector<double> start = sys.marginal_at(data_dist, T);
  std::vector<double> weights(S, 0.0);
  std::vector<long> counts(S, 0);

  for (long sample = 0; sample < num_samples; ++sample) {
    std::size_t x = static_cast<std::size_t>(rng.categorical(start));
    double t = T;
    int k = 0;
    while (t > t_floor) {
      while (k + 1 < kNumSegments && t <= seg_hi(k + 1)) ++k;
      const double lo = seg_hi(k + 1);
      const double cap = bound[k][x];
      if (cap <= 0.0) {
        t = lo;
        continue;
      }
      const double next = t - rng.exponential(cap);
      if (next <= lo) {
        t = lo;
        continue;
      }
      const Matrix rates = sys.reverse_rates_at(data_dist, next);
      double exit = 0.0;
      for (std::size_t y = 0; y < S; ++y) {
        if (y != x) exit += rates.at(x, y);
      }
      if (rng.uniform() * cap < exit) {
        for (std::size_t y = 0; y < S; ++y) {
          weights[y] = y == x ? 0.0 : rates.at(x, y);
        }
        x = static_cast<std::size_t>(rng.categorical(weights));
      }
      t = next;
    }
    ++counts[x];
  }

  std::vector<double> freq(S, 0.0);
  for (std::size_t x = 0; x < S; ++x) {
    freq[x] = static_cast<double>(counts[x]) / static_cast<double>(num_samples);
  }
  return freq;
}

}  // namespace graphdiff
