#include "graphdiff/graph.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace graphdiff {

namespace {

std::uint64_t fnv1a(std::uint64_t h, std::uint64_t value) {
  for (int b = 0; b < 8; ++b) {
    h ^= (value >> (8 * b)) & 0xffULL;
    h *= 1099511628211ULL;
  }
  return h;
}

constexpr std::uint64_t kFnvSeed = 14695981039346656037ULL;

}  // namespace

void CategoricalGraph::set_edge(int i, int j, int type) {
  if (i < 0 || j < 0 || i >= n || j >= n)
    throw std::invalid_argument("set_edge: index out of range");
  if (i == j) {
    if (type != 0) throw std::invalid_argument("set_edge: self loop");
    return;
  }
  edge_types[static_cast<std::size_t>(i) * n + j] = type;
  edge_types[static_cast<std::size_t>(j) * n + i] = type;
}

int CategoricalGraph::num_edges() const {
  int count = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (edge(i, j) > 0) ++count;
  return count;
}

void validate_graph(const CategoricalGraph& g, int node_alphabet, int edge_alphabet) {
  if (g.n < 0) throw std::invalid_argument("graph: negative node count");
  const std::size_t n = static_cast<std::size_t>(g.n);
  if (g.node_types.size() != n || g.edge_types.size() != n * n)
    throw std::invalid_argument("graph: storage does not match node count");
  for (int i = 0; i < g.n; ++i) {
    if (g.node_types[i] < 0 ||
        (node_alphabet > 0 && g.node_types[i] >= node_alphabet))
      throw std::invalid_argument("graph: node type out of range");
    if (g.edge(i, i) != 0) throw std::invalid_argument("graph: nonzero diagonal");
    for (int j = 0; j < g.n; ++j) {
      const int e = g.edge(i, j);
      if (e < 0 || (edge_alphabet > 0 && e > edge_alphabet))
        throw std::invalid_argument("graph: edge type out of range");
      if (e != g.edge(j, i)) throw std::invalid_argument("graph: asymmetric edges");
    }
  }
}

CategoricalGraph permute_graph(const CategoricalGraph& g, const std::vector<int>& sigma) {
  if (static_cast<int>(sigma.size()) != g.n)
    throw std::invalid_argument("permute_graph: sigma length != n");
  std::vector<char> seen(static_cast<std::size_t>(g.n), 0);
  for (int v : sigma) {
    if (v < 0 || v >= g.n || seen[v])
      throw std::invalid_argument("permute_graph: sigma is not a permutation");
    seen[v] = 1;
  }
  CategoricalGraph out(g.n);
  for (int i = 0; i < g.n; ++i) out.node_types[sigma[i]] = g.node_types[i];
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      out.edge_types[static_cast<std::size_t>(sigma[i]) * g.n + sigma[j]] =
          g.edge_types[static_cast<std::size_t>(i) * g.n + j];
  return out;
}

namespace {

// Encoding of the graph with node order pi: node types first, then the upper
// triangle row-major. Lexicographic minimum over all pi is a canonical form.
void encode_under(const CategoricalGraph& g, const std::vector<int>& pi,
                  std::vector<int>& out) {
  out.clear();
  for (int v = 0; v < g.n; ++v) out.push_back(g.node_types[pi[v]]);
  for (int u = 0; u < g.n; ++u)
    for (int v = u + 1; v < g.n; ++v) out.push_back(g.edge(pi[u], pi[v]));
}

std::string exact_key(const CategoricalGraph& g) {
  std::vector<int> pi(static_cast<std::size_t>(g.n));
  std::iota(pi.begin(), pi.end(), 0);
  std::vector<int> best, cand;
  encode_under(g, pi, best);
  while (std::next_permutation(pi.begin(), pi.end())) {
    encode_under(g, pi, cand);
    if (cand < best) best.swap(cand);
  }
  std::string key = "ex:" + std::to_string(g.n);
  for (int v : best) {
    key.push_back(',');
    key += std::to_string(v);
  }
  return key;
}

std::string wl_key(const CategoricalGraph& g) {
  std::vector<std::uint64_t> color(static_cast<std::size_t>(g.n));
  for (int i = 0; i < g.n; ++i)
    color[i] = fnv1a(kFnvSeed, static_cast<std::uint64_t>(g.node_types[i]));
  std::vector<std::uint64_t> next(color.size());
  for (int round = 0; round < 3; ++round) {
    for (int i = 0; i < g.n; ++i) {
      // Neighborhood signature over all other nodes; "no edge" participates
      // as type 0 so the complement structure is seen too.
      std::vector<std::uint64_t> sig;
      sig.reserve(static_cast<std::size_t>(g.n) - 1);
      for (int j = 0; j < g.n; ++j) {
        if (j == i) continue;
        std::uint64_t h = fnv1a(kFnvSeed, static_cast<std::uint64_t>(g.edge(i, j)));
        h = fnv1a(h, color[j]);
        sig.push_back(h);
      }
      std::sort(sig.begin(), sig.end());
      std::uint64_t h = fnv1a(kFnvSeed, color[i]);
      for (std::uint64_t s : sig) h = fnv1a(h, s);
      next[i] = h;
    }
    color.swap(next);
  }
  std::sort(color.begin(), color.end());
  std::uint64_t h = fnv1a(kFnvSeed, static_cast<std::uint64_t>(g.n));
  for (std::uint64_t c : color) h = fnv1a(h, c);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "wl:%d:%016llx", g.n,
                static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace

std::string canonical_key(const CategoricalGraph& g) {
  validate_graph(g, 0, 0);
  if (g.n == 0) return "ex:0";
  if (g.n <= 9) return exact_key(g);
  return wl_key(g);
}

SizeDistribution::SizeDistribution(const std::map<int, long>& counts)
    : counts_(counts) {
  for (const auto& [size, count] : counts_) {
    if (size < 1 || count < 1)
      throw std::invalid_argument("SizeDistribution: sizes and counts must be positive");
    total_ += count;
  }
}

int SizeDistribution::sample(Rng& rng) const {
  if (counts_.empty()) throw std::invalid_argument("SizeDistribution: empty");
  // Walk the CDF in key order; the map ordering makes this deterministic.
  double u = rng.uniform() * static_cast<double>(total_);
  int last = 0;
  for (const auto& [size, count] : counts_) {
    last = size;
    u -= static_cast<double>(count);
    if (u < 0.0) return size;
  }
  return last;
}

SizeDistribution fit_size_distribution(const std::vector<CategoricalGraph>& graphs) {
  if (graphs.empty())
    throw std::invalid_argument("fit_size_distribution: empty graph list");
  std::map<int, long> counts;
  for (const auto& g : graphs) ++counts[g.n];
  return SizeDistribution(counts);
}

}  // namespace graphdiff
