#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "graphdiff/aux_features.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/rng.hpp"
#include "graphdiff/tape.hpp"

namespace graphdiff {

// Edge embeddings and probabilities are stored as one row per unordered pair
// i<j, in lexicographic order. The full n x n view is recovered by mirroring,
// so symmetry is exact by construction.
inline std::size_t pair_count(std::size_t n) { return n * (n - 1) / 2; }
inline std::size_t pair_index(std::size_t n, std::size_t i, std::size_t j) {
  if (i > j) std::swap(i, j);
  return i * (2 * n - i - 1) / 2 + (j - i - 1);
}

struct ModelConfig {
  int node_classes = 2;  // node type alphabet size
  int edge_classes = 2;  // edge type alphabet size including "absent" (type 0)
  int hidden = 64;
  int layers = 3;
  double dropout = 0.0;
  double horizon = 1.0;  // diffusion end time, conditions t / horizon
};

struct FilmVars {
  Var w1, b1, w2, b2;  // Lin1 then Lin2
};
struct MlpVars {
  Var w1, b1, w2, b2;  // hidden layer then output layer
};

// FiLM(x, y) = Lin1(x) + Lin2(x) .* y + y, rows independently.
// film: y has the same shape as x. film_bcast: y is a single 1 x h row
// conditioning every row of x.
Var film(Tape& t, Var x, Var y, const FilmVars& p);
Var film_bcast(Tape& t, Var x, Var y_row, const FilmVars& p);

// Linear, ReLU, (dropout), Linear. Dropout active only when rng is non-null
// and rate > 0.
Var mlp2(Tape& t, Var x, const MlpVars& p, double dropout = 0.0, Rng* rng = nullptr);

// Rows of `set` are the input vectors: concat(min, max, mean, std) over the
// row axis followed by mlp2. A set with one zero row is the caller's guard
// for the empty case.
Var pna(Tape& t, Var set, const MlpVars& p, double dropout = 0.0, Rng* rng = nullptr);

struct LayerVars {
  MlpVars msg;
  FilmVars node_inner, node_outer;  // message conditioning, then global
  FilmVars edge_inner, edge_outer;
  MlpVars node_pna, edge_pna;
};

struct MpnnState {
  Var nodes;   // n x h
  Var edges;   // pair_count(n) x h; ignored when has_edges is false
  Var global;  // 1 x h
  bool has_edges = false;
};

// One message-passing layer. Sub-update order: nodes from the incoming
// edges, edges from the updated nodes, global from both updated sets.
// Node aggregation averages the incident pair embeddings over n-1 neighbors
// (a single node gets a zero message).
MpnnState mpnn_layer(Tape& t, const MpnnState& s, const LayerVars& p, std::size_t n,
                     double dropout = 0.0, Rng* rng = nullptr);

struct ForwardResult {
  Var node_probs;           // n x node_classes, rows sum to 1
  Var edge_probs;           // pair_count(n) x edge_classes; valid iff has_edges
  bool has_edges = false;
  std::vector<Var> leaves;  // parameter leaves, parallel to params()
};

struct CleanPrediction {
  std::size_t n = 0;
  int node_classes = 0, edge_classes = 0;
  std::vector<double> node_probs;  // n x node_classes
  std::vector<double> edge_probs;  // pair_count(n) x edge_classes

  const double* node_row(std::size_t i) const {
    return &node_probs[i * static_cast<std::size_t>(node_classes)];
  }
  const double* edge_row(std::size_t i, std::size_t j) const {
    return &edge_probs[pair_index(n, i, j) * static_cast<std::size_t>(edge_classes)];
  }
};

// Denoiser: predicts clean-graph probabilities from a corrupted graph and a
// time. One-hot inputs plus structural features feed input MLPs, L message
// passing layers, and per-row softmax readouts.
class DenoiserModel {
 public:
  DenoiserModel() = default;
  DenoiserModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::vector<Parameter>& params() { return params_; }
  const std::vector<Parameter>& params() const { return params_; }
  std::vector<Parameter*> param_ptrs();
  Parameter* find(const std::string& name);

  // Builds the differentiable forward pass on t. Dropout is active only when
  // dropout_rng is non-null. leaves[k] is the leaf for params()[k].
  ForwardResult forward(Tape& t, const CategoricalGraph& g_t, double time,
                        Rng* dropout_rng = nullptr) const;

  // Inference: no dropout, plain number output.
  CleanPrediction predict_clean(const CategoricalGraph& g_t, double time) const;

 private:
  ModelConfig cfg_;
  std::vector<Parameter> params_;
};

}  // namespace graphdiff
