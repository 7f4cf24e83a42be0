#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "graphdiff/rng.hpp"

namespace graphdiff {

// Undirected graph with categorical node and edge labels. Edge type 0 means
// "no edge"; real edge types are 1..a. The edge matrix is kept symmetric with
// a zero diagonal at all times.
struct CategoricalGraph {
  int n = 0;
  std::vector<int> node_types;  // length n
  std::vector<int> edge_types;  // n*n row-major

  CategoricalGraph() = default;
  explicit CategoricalGraph(int num_nodes)
      : n(num_nodes),
        node_types(static_cast<std::size_t>(num_nodes), 0),
        edge_types(static_cast<std::size_t>(num_nodes) * num_nodes, 0) {}

  int edge(int i, int j) const { return edge_types[static_cast<std::size_t>(i) * n + j]; }

  // Mirrors (i,j) and (j,i); rejects self loops with nonzero type.
  void set_edge(int i, int j, int type);

  int num_edges() const;  // unordered pairs with type > 0
};

// Structural sanity: square symmetric edge matrix, zero diagonal, value
// ranges if alphabets are given (pass b/a <= 0 to skip the range check).
void validate_graph(const CategoricalGraph& g, int node_alphabet, int edge_alphabet);

// Relabels nodes: node i of g becomes node sigma[i] of the result.
// sigma must be a permutation of 0..n-1.
CategoricalGraph permute_graph(const CategoricalGraph& g, const std::vector<int>& sigma);

// Isomorphism-invariant string key. For n <= 9 the key is an exact canonical
// form (minimum encoding over all relabelings), so equal keys <=> isomorphic.
// Above that a 3-round Weisfeiler-Lehman color refinement hash is used:
// isomorphic graphs always collide, non-isomorphic ones almost always do not.
std::string canonical_key(const CategoricalGraph& g);

// Empirical node-count distribution of a training set.
class SizeDistribution {
 public:
  SizeDistribution() = default;
  explicit SizeDistribution(const std::map<int, long>& counts);

  int sample(Rng& rng) const;
  const std::map<int, long>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }

 private:
  std::map<int, long> counts_;
  long total_ = 0;
};

SizeDistribution fit_size_distribution(const std::vector<CategoricalGraph>& graphs);

}  // namespace graphdiff
