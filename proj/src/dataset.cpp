#include "graphdiff/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace graphdiff {

namespace {

void bernoulli_block(CategoricalGraph& g, int lo_a, int hi_a, int lo_b,
                     int hi_b, double p, Rng& rng) {
  for (int i = lo_a; i < hi_a; ++i) {
    for (int j = std::max(i + 1, lo_b); j < hi_b; ++j) {
      if (rng.uniform() < p) g.set_edge(i, j, 1);
    }
  }
}

[[noreturn]] void parse_fail(const std::string& path, std::size_t line,
                             const std::string& what) {
  throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

CategoricalGraph community_graph(int b1, int b2, double p_intra,
                                 int inter_edges, Rng& rng) {
  if (b1 < 1 || b2 < 1) {
    throw std::invalid_argument("community_graph: empty block");
  }
  if (p_intra < 0.0 || p_intra > 1.0) {
    throw std::invalid_argument("community_graph: probability out of range");
  }
  const int n = b1 + b2;
  if (inter_edges < 0 || inter_edges > b1 * b2) {
    throw std::invalid_argument("community_graph: bad inter-edge count");
  }

  CategoricalGraph g(n);
  bernoulli_block(g, 0, b1, 0, b1, p_intra, rng);
  bernoulli_block(g, b1, n, b1, n, p_intra, rng);

  // Cross pairs, sampled without replacement by swap-removal.
  std::vector<std::pair<int, int>> cross;
  cross.reserve(static_cast<std::size_t>(b1) * b2);
  for (int i = 0; i < b1; ++i)
    for (int j = b1; j < n; ++j) cross.emplace_back(i, j);
  for (int k = 0; k < inter_edges; ++k) {
    const int pick = rng.uniform_int(static_cast<int>(cross.size()));
    const auto [i, j] = cross[static_cast<std::size_t>(pick)];
    g.set_edge(i, j, 1);
    cross[static_cast<std::size_t>(pick)] = cross.back();
    cross.pop_back();
  }
  return g;
}

CategoricalGraph sbm_graph(const std::vector<int>& block_sizes, double p_intra,
                           double p_inter, Rng& rng) {
  if (block_sizes.empty()) {
    throw std::invalid_argument("sbm_graph: no blocks");
  }
  int n = 0;
  for (int b : block_sizes) {
    if (b < 1) throw std::invalid_argument("sbm_graph: empty block");
    n += b;
  }
  if (p_intra < 0.0 || p_intra > 1.0 || p_inter < 0.0 || p_inter > 1.0) {
    throw std::invalid_argument("sbm_graph: probability out of range");
  }

  CategoricalGraph g(n);
  std::vector<int> starts = {0};
  for (int b : block_sizes) starts.push_back(starts.back() + b);
  const std::size_t blocks = block_sizes.size();
  for (std::size_t a = 0; a < blocks; ++a) {
    for (std::size_t b = a; b < blocks; ++b) {
      const double p = a == b ? p_intra : p_inter;
      bernoulli_block(g, starts[a], starts[a + 1], starts[b], starts[b + 1], p,
                      rng);
    }
  }
  return g;
}

std::vector<CategoricalGraph> generate_dataset(const DatasetSpec& spec) {
  if (spec.count < 0) {
    throw std::invalid_argument("generate_dataset: negative count");
  }
  const Rng root(spec.seed);
  std::vector<CategoricalGraph> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int k = 0; k < spec.count; ++k) {
    Rng rng = root.child(static_cast<std::uint64_t>(k));
    if (spec.kind == DatasetKind::kCommunity) {
      const int b1 = 6 + rng.uniform_int(5);
      const int b2 = 6 + rng.uniform_int(5);
      const int inter =
          static_cast<int>(std::ceil(0.05 * static_cast<double>(b1 + b2)));
      out.push_back(community_graph(b1, b2, 0.7, inter, rng));
    } else {
      std::vector<int> blocks(static_cast<std::size_t>(2 + rng.uniform_int(2)));
      for (int& b : blocks) b = 8 + rng.uniform_int(5);
      out.push_back(sbm_graph(blocks, 0.3, 0.05, rng));
    }
  }
  return out;
}

std::pair<std::vector<CategoricalGraph>, std::vector<CategoricalGraph>>
split_dataset(const std::vector<CategoricalGraph>& graphs,
              double train_fraction, std::uint64_t seed) {
  if (train_fraction < 0.0 || train_fraction > 1.0) {
    throw std::invalid_argument("split_dataset: fraction out of range");
  }
  const std::size_t size = graphs.size();
  std::vector<int> order(size);
  for (std::size_t i = 0; i < size; ++i) order[i] = static_cast<int>(i);
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t train_count = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(size)));
  std::pair<std::vector<CategoricalGraph>, std::vector<CategoricalGraph>> out;
  for (std::size_t i = 0; i < size; ++i) {
    const CategoricalGraph& g = graphs[static_cast<std::size_t>(order[i])];
    (i < train_count ? out.first : out.second).push_back(g);
  }
  return out;
}

void write_jsonl(const std::string& path,
                 const std::vector<CategoricalGraph>& graphs) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("write_jsonl: cannot open " + path);
  for (const auto& g : graphs) {
    validate_graph(g, 0, 0);
    std::ostringstream line;
    line << "{\"n\":" << g.n << ",\"nodes\":[";
    for (int i = 0; i < g.n; ++i) {
      if (i) line << ',';
      line << g.node_types[static_cast<std::size_t>(i)];
    }
    line << "],\"edges\":[";
    bool first = true;
    for (int i = 0; i < g.n; ++i) {
      for (int j = i + 1; j < g.n; ++j) {
        const int type = g.edge(i, j);
        if (type == 0) continue;
        if (!first) line << ',';
        first = false;
        line << '[' << i << ',' << j << ',' << type << ']';
      }
    }
    line << "]}";
    file << line.str() << '\n';
  }
  if (!file) throw std::runtime_error("write_jsonl: write failed on " + path);
}

std::vector<CategoricalGraph> read_jsonl(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("read_jsonl: cannot open " + path);

  std::vector<CategoricalGraph> out;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(file, text)) {
    ++lineno;
    if (text.empty()) continue;

    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      parse_fail(path, lineno, std::string("bad JSON: ") + e.what());
    }
    if (!j.is_object()) parse_fail(path, lineno, "line is not an object");
    if (!j.contains("n") || !j["n"].is_number_integer()) {
      parse_fail(path, lineno, "field 'n' missing or not an integer");
    }
    const int n = j["n"].get<int>();
    if (n < 0) parse_fail(path, lineno, "field 'n' is negative");
    if (!j.contains("nodes") || !j["nodes"].is_array() ||
        static_cast<int>(j["nodes"].size()) != n) {
      parse_fail(path, lineno, "field 'nodes' missing or not length n");
    }

    CategoricalGraph g(n);
    for (int i = 0; i < n; ++i) {
      const auto& v = j["nodes"][static_cast<std::size_t>(i)];
      if (!v.is_number_integer() || v.get<int>() < 0) {
        parse_fail(path, lineno,
                   "field 'nodes'[" + std::to_string(i) + "] is not a "
                   "nonnegative integer");
      }
      g.node_types[static_cast<std::size_t>(i)] = v.get<int>();
    }

    if (!j.contains("edges") || !j["edges"].is_array()) {
      parse_fail(path, lineno, "field 'edges' missing or not an array");
    }
    std::set<std::pair<int, int>> seen;
    for (std::size_t k = 0; k < j["edges"].size(); ++k) {
      const auto& e = j["edges"][k];
      const std::string where = "field 'edges'[" + std::to_string(k) + "]";
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
          !e[1].is_number_integer() || !e[2].is_number_integer()) {
        parse_fail(path, lineno, where + " is not an [i, j, type] triple");
      }
      const int i = e[0].get<int>();
      const int jj = e[1].get<int>();
      const int type = e[2].get<int>();
      if (i < 0 || jj >= n || i >= jj) {
        parse_fail(path, lineno,
                   where + " indices must satisfy 0 <= i < j < n");
      }
      if (type < 1) parse_fail(path, lineno, where + " type must be >= 1");
      if (!seen.insert({i, jj}).second) {
        parse_fail(path, lineno, where + " duplicates an earlier edge");
      }
      g.set_edge(i, jj, type);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace graphdiff
