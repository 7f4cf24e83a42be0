#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "graphdiff/graph.hpp"
#include "graphdiff/rng.hpp"

namespace graphdiff {

enum class DatasetKind { kCommunity, kSbm };

// Both kinds produce plain graphs: one node type (all zeros), edges present
// or absent. Size and density parameters are fixed per kind:
//   community: two blocks of 6..10 nodes, intra-edge probability 0.7, and
//              ceil(0.05 n) edges between the blocks
//   sbm:       2..3 blocks of 8..12 nodes, p_intra 0.3, p_inter 0.05
struct DatasetSpec {
  DatasetKind kind = DatasetKind::kCommunity;
  int count = 0;
  std::uint64_t seed = 0;
};

// Blocks are the contiguous index ranges [0, b1) and [b1, b1+b2). Cross
// edges are drawn without replacement.
CategoricalGraph community_graph(int b1, int b2, double p_intra,
                                 int inter_edges, Rng& rng);

CategoricalGraph sbm_graph(const std::vector<int>& block_sizes, double p_intra,
                           double p_inter, Rng& rng);

// Pure function of the spec: graph k is drawn from the child stream k of
// Rng(spec.seed).
std::vector<CategoricalGraph> generate_dataset(const DatasetSpec& spec);

// Seed-shuffled index split; the train side gets round(fraction * size).
std::pair<std::vector<CategoricalGraph>, std::vector<CategoricalGraph>>
split_dataset(const std::vector<CategoricalGraph>& graphs,
              double train_fraction, std::uint64_t seed);

// One graph per line: {"n": int, "nodes": [t0, ...], "edges": [[i, j, type],
// ...]} with i < j and type >= 1; absent edges are implicit. Writing is
// byte-deterministic (edges sorted, integers only). Malformed input raises
// errors naming the file, line, and offending field.
void write_jsonl(const std::string& path,
                 const std::vector<CategoricalGraph>& graphs);
std::vector<CategoricalGraph> read_jsonl(const std::string& path);

}  // namespace graphdiff
