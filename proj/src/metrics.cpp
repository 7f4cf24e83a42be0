#include "graphdiff/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <unordered_set>

#include "json.hpp"

namespace graphdiff {

namespace {

constexpr int kClusteringBins = 100;
constexpr int kOrbitBins = 16;
constexpr int kOrbitMaxNodes = 128;
constexpr double kBaselineFloor = 1e-12;

std::vector<int> degrees(const CategoricalGraph& g) {
  std::vector<int> deg(static_cast<std::size_t>(g.n), 0);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      if (j != i && g.edge(i, j) > 0) ++deg[static_cast<std::size_t>(i)];
    }
  }
  return deg;
}

std::vector<double> degree_histogram(const CategoricalGraph& g) {
  std::vector<double> hist(static_cast<std::size_t>(g.n), 0.0);
  const double w = 1.0 / g.n;
  for (int d : degrees(g)) hist[static_cast<std::size_t>(d)] += w;
  return hist;
}

std::vector<double> clustering_histogram(const CategoricalGraph& g) {
  std::vector<double> hist(kClusteringBins, 0.0);
  const std::vector<int> deg = degrees(g);
  const double w = 1.0 / g.n;
  for (int i = 0; i < g.n; ++i) {
    double coeff = 0.0;
    if (deg[static_cast<std::size_t>(i)] >= 2) {
      long wedges = 0;
      long closed = 0;
      for (int a = 0; a < g.n; ++a) {
        if (a == i || g.edge(i, a) == 0) continue;
        for (int b = a + 1; b < g.n; ++b) {
          if (b == i || g.edge(i, b) == 0) continue;
          ++wedges;
          if (g.edge(a, b) > 0) ++closed;
        }
      }
      coeff = static_cast<double>(closed) / static_cast<double>(wedges);
    }
    const int bin = std::min(static_cast<int>(coeff * kClusteringBins),
                             kClusteringBins - 1);
    hist[static_cast<std::size_t>(bin)] += w;
  }
  return hist;
}

// Membership counts in connected induced 4-node subgraphs, one count per
// node. Exhaustive over all 4-subsets.
std::vector<long> orbit4_counts(const CategoricalGraph& g) {
  std::vector<long> counts(static_cast<std::size_t>(g.n), 0);
  const auto adj = [&g](int u, int v) { return g.edge(u, v) > 0; };
  for (int a = 0; a < g.n; ++a) {
    for (int b = a + 1; b < g.n; ++b) {
      for (int c = b + 1; c < g.n; ++c) {
        for (int d = c + 1; d < g.n; ++d) {
          const int quad[4] = {a, b, c, d};
          // Connectivity of four nodes: grow a reachable set from quad[0].
          bool reach[4] = {true, false, false, false};
          for (int pass = 0; pass < 3; ++pass) {
            for (int u = 0; u < 4; ++u) {
              if (!reach[u]) continue;
              for (int v = 0; v < 4; ++v) {
                if (!reach[v] && adj(quad[u], quad[v])) reach[v] = true;
              }
            }
          }
          if (reach[1] && reach[2] && reach[3]) {
            for (int u : quad) ++counts[static_cast<std::size_t>(u)];
          }
        }
      }
    }
  }
  return counts;
}

std::vector<double> orbit4_histogram(const CategoricalGraph& g) {
  if (g.n > kOrbitMaxNodes) {
    throw std::invalid_argument(
        "graph_statistic: orbit enumeration capped at 128 nodes");
  }
  std::vector<double> hist(kOrbitBins, 0.0);
  const double w = 1.0 / g.n;
  for (long c : orbit4_counts(g)) {
    const int bin = std::min(
        static_cast<int>(std::floor(std::log2(static_cast<double>(c) + 1.0))),
        kOrbitBins - 1);
    hist[static_cast<std::size_t>(bin)] += w;
  }
  return hist;
}

std::vector<std::vector<double>> statistics_of(
    const std::vector<CategoricalGraph>& graphs, StatKind kind) {
  std::vector<std::vector<double>> out;
  out.reserve(graphs.size());
  for (const auto& g : graphs) out.push_back(graph_statistic(g, kind));
  return out;
}

double tv_distance(const std::vector<double>& x, const std::vector<double>& y) {
  // Both vectors already share a common padded length at call sites.
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += std::fabs(x[i] - y[i]);
  return 0.5 * sum;
}

// Kernel values are accumulated in sorted order, so the total is independent
// of pair enumeration order: swapping the argument sets reproduces the exact
// same double.
double kernel_sum(const std::vector<std::vector<double>>& a,
                  const std::vector<std::vector<double>>& b, double inv_two_sq) {
  std::vector<double> terms;
  terms.reserve(a.size() * b.size());
  for (const auto& x : a) {
    for (const auto& y : b) {
      const double tv = tv_distance(x, y);
      terms.push_back(std::exp(-tv * tv * inv_two_sq));
    }
  }
  std::sort(terms.begin(), terms.end());
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum;
}

}  // namespace

std::vector<double> graph_statistic(const CategoricalGraph& g, StatKind kind) {
  validate_graph(g, 0, 0);
  if (g.n == 0) throw std::invalid_argument("graph_statistic: empty graph");
  switch (kind) {
    case StatKind::kDegree:
      return degree_histogram(g);
    case StatKind::kClustering:
      return clustering_histogram(g);
    case StatKind::kOrbit4:
      return orbit4_histogram(g);
  }
  throw std::invalid_argument("graph_statistic: unknown kind");
}

double mmd2_biased(const std::vector<std::vector<double>>& x,
                   const std::vector<std::vector<double>>& y, double sigma) {
  if (x.empty() || y.empty()) {
    throw std::invalid_argument("mmd2_biased: empty histogram set");
  }
  if (!(sigma > 0.0)) {
    throw std::invalid_argument("mmd2_biased: sigma must be positive");
  }
  std::size_t width = 0;
  for (const auto& h : x) width = std::max(width, h.size());
  for (const auto& h : y) width = std::max(width, h.size());

  std::vector<std::vector<double>> xp = x;
  std::vector<std::vector<double>> yp = y;
  for (auto& h : xp) h.resize(width, 0.0);
  for (auto& h : yp) h.resize(width, 0.0);

  const double inv_two_sq = 1.0 / (2.0 * sigma * sigma);
  const double nx = static_cast<double>(xp.size());
  const double ny = static_cast<double>(yp.size());
  return kernel_sum(xp, xp, inv_two_sq) / (nx * nx) +
         kernel_sum(yp, yp, inv_two_sq) / (ny * ny) -
         2.0 * kernel_sum(xp, yp, inv_two_sq) / (nx * ny);
}

StatisticScore relative_score(const std::vector<CategoricalGraph>& gen,
                              const std::vector<CategoricalGraph>& train,
                              const std::vector<CategoricalGraph>& test,
                              StatKind kind) {
  const auto gen_h = statistics_of(gen, kind);
  const auto train_h = statistics_of(train, kind);
  const auto test_h = statistics_of(test, kind);

  StatisticScore s;
  s.raw = std::max(0.0, mmd2_biased(gen_h, test_h));
  s.baseline = std::max(0.0, mmd2_biased(train_h, test_h));
  s.defined = s.baseline > kBaselineFloor;
  s.score = s.defined ? s.raw / s.baseline : 0.0;
  return s;
}

std::pair<double, double> uniqueness_novelty(
    const std::vector<CategoricalGraph>& gen,
    const std::vector<CategoricalGraph>& train) {
  if (gen.empty()) {
    throw std::invalid_argument("uniqueness_novelty: no generated graphs");
  }
  std::unordered_set<std::string> train_keys;
  for (const auto& g : train) train_keys.insert(canonical_key(g));

  std::unordered_set<std::string> distinct;
  std::size_t novel = 0;
  for (const auto& g : gen) {
    const std::string key = canonical_key(g);
    distinct.insert(key);
    if (!train_keys.count(key)) ++novel;
  }
  const double total = static_cast<double>(gen.size());
  return {static_cast<double>(distinct.size()) / total,
          static_cast<double>(novel) / total};
}

EvalReport evaluate(const std::vector<CategoricalGraph>& gen,
                    const std::vector<CategoricalGraph>& train,
                    const std::vector<CategoricalGraph>& test,
                    const EvalSelection& select) {
  EvalReport report;
  report.num_generated = gen.size();
  report.num_train = train.size();
  report.num_test = test.size();
  if (select.degree) report.degree = relative_score(gen, train, test, StatKind::kDegree);
  if (select.clustering) {
    report.clustering = relative_score(gen, train, test, StatKind::kClustering);
  }
  if (select.orbit4) report.orbit4 = relative_score(gen, train, test, StatKind::kOrbit4);
  const auto [uniq, nov] = uniqueness_novelty(gen, train);
  report.uniqueness = uniq;
  report.novelty = nov;
  return report;
}

std::string report_json(const EvalReport& report) {
  nlohmann::json j;
  const auto put = [&j](const char* name, const std::optional<StatisticScore>& s) {
    if (!s) return;
    nlohmann::json entry;
    entry["raw"] = s->raw;
    entry["baseline"] = s->baseline;
    if (s->defined) {
      entry["score"] = s->score;
    } else {
      entry["score"] = nullptr;
    }
    j[name] = entry;
  };
  put("deg", report.degree);
  put("clus", report.clustering);
  put("orb", report.orbit4);
  j["uniqueness"] = report.uniqueness;
  j["novelty"] = report.novelty;
  j["num_generated"] = report.num_generated;
  j["num_train"] = report.num_train;
  j["num_test"] = report.num_test;
  return j.dump(2);
}

}  // namespace graphdiff
