#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphdiff/graph.hpp"

namespace graphdiff {

enum class StatKind { kDegree, kClustering, kOrbit4 };

// Per-graph structural fingerprint as a normalized histogram over nodes.
// Edges are binarized (any type > 0 counts).
//   degree:     mass at each degree 0..n-1
//   clustering: per-node coefficients in 100 uniform bins on [0, 1]
//   orbit4:     per-node membership counts in connected 4-node induced
//               subgraphs, binned as floor(log2(count + 1)) into 16 bins;
//               exhaustive over 4-subsets, so n is capped at 128
// For n < 4 the orbit statistic degenerates to all mass in bin 0.
std::vector<double> graph_statistic(const CategoricalGraph& g, StatKind kind);

// Biased (V-statistic) squared maximum mean discrepancy between two sets of
// histograms under the Gaussian total-variation kernel
//   k(x, y) = exp(-TV(x, y)^2 / (2 sigma^2)),  TV = 0.5 * sum |x_i - y_i|.
// Histograms are zero-padded to a common length. Identical multisets give
// exactly zero; rounding can only push the value negligibly below zero.
double mmd2_biased(const std::vector<std::vector<double>>& x,
                   const std::vector<std::vector<double>>& y,
                   double sigma = 1.0);

struct StatisticScore {
  double raw = 0.0;       // MMD^2(generated, test), clamped at 0
  double baseline = 0.0;  // MMD^2(train, test), clamped at 0
  double score = 0.0;     // raw / baseline when defined
  bool defined = false;   // false when the baseline is below 1e-12
};

// score = MMD^2(gen, test) / MMD^2(train, test) for one statistic kind.
StatisticScore relative_score(const std::vector<CategoricalGraph>& gen,
                              const std::vector<CategoricalGraph>& train,
                              const std::vector<CategoricalGraph>& test,
                              StatKind kind);

// uniqueness: distinct isomorphism classes in gen / |gen|.
// novelty: fraction of gen not isomorphic to any training graph.
std::pair<double, double> uniqueness_novelty(
    const std::vector<CategoricalGraph>& gen,
    const std::vector<CategoricalGraph>& train);

struct EvalSelection {
  bool degree = true;
  bool clustering = true;
  bool orbit4 = true;
};

struct EvalReport {
  std::optional<StatisticScore> degree;
  std::optional<StatisticScore> clustering;
  std::optional<StatisticScore> orbit4;
  double uniqueness = 0.0;
  double novelty = 0.0;
  std::size_t num_generated = 0;
  std::size_t num_train = 0;
  std::size_t num_test = 0;
};

EvalReport evaluate(const std::vector<CategoricalGraph>& gen,
                    const std::vector<CategoricalGraph>& train,
                    const std::vector<CategoricalGraph>& test,
                    const EvalSelection& select = {});

// {"deg": {"raw":..., "baseline":..., "score":...}, ..., "uniqueness":...};
// statistics that were not selected are omitted, undefined scores are null.
std::string report_json(const EvalReport& report);

}  // namespace graphdiff
