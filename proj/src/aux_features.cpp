#include "graphdiff/aux_features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace graphdiff {

std::vector<double> symmetric_eigenvalues(std::vector<double> a, std::size_t n,
                                          double tol) {
  if (a.size() != n * n) throw std::invalid_argument("eigenvalues: bad shape");
  if (n == 0) return {};
  double scale = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(a[i * n + j] - a[j * n + i]) > 1e-12 * (1.0 + std::abs(a[i * n + j])))
        throw std::invalid_argument("eigenvalues: matrix not symmetric");
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale > 0.0) {
    const double thresh = tol * scale;
    for (int sweep = 0; sweep < 100; ++sweep) {
      double off = 0.0;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a[p * n + q]));
      if (off <= thresh) break;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) {
          const double apq = a[p * n + q];
          if (std::abs(apq) <= thresh) continue;
          const double app = a[p * n + p], aqq = a[q * n + q];
          const double theta = (aqq - app) / (2.0 * apq);
          double t;
          if (std::abs(theta) > 1e150)
            t = 1.0 / (2.0 * theta);
          else
            t = (theta >= 0.0 ? 1.0 : -1.0) /
                (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          const double c = 1.0 / std::sqrt(t * t + 1.0);
          const double s = t * c;
          for (std::size_t k = 0; k < n; ++k) {
            if (k == p || k == q) continue;
            const double akp = a[k * n + p], akq = a[k * n + q];
            a[k * n + p] = a[p * n + k] = c * akp - s * akq;
            a[k * n + q] = a[q * n + k] = s * akp + c * akq;
          }
          a[p * n + p] = app - t * apq;
          a[q * n + q] = aqq + t * apq;
          a[p * n + q] = a[q * n + p] = 0.0;
        }
    }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a[i * n + i];
  std::sort(eig.begin(), eig.end());
  return eig;
}

AuxFeatures compute_aux(const CategoricalGraph& g, double t, double horizon) {
  if (!(horizon > 0.0)) throw std::invalid_argument("compute_aux: horizon must be positive");
  if (!(t >= 0.0) || t > horizon)
    throw std::invalid_argument("compute_aux: t outside [0, horizon]");
  const std::size_t n = static_cast<std::size_t>(g.n);

  std::vector<char> adj(n * n, 0);
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j)
      if (i != j && g.edge(i, j) > 0) {
        adj[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] = 1;
        nbrs[static_cast<std::size_t>(i)].push_back(j);
      }

  // Simple cycles of length 3..6, each enumerated twice (once per direction)
  // from its minimum vertex; halved afterwards so all counts stay integers.
  std::vector<std::array<long, 7>> node_closures(n, std::array<long, 7>{});
  std::array<long, 7> total_closures{};
  std::vector<int> path;
  std::vector<char> onpath(n, 0);
  std::function<void(int, int)> extend = [&](int s, int v) {
    const int depth = static_cast<int>(path.size());
    if (depth >= 3 && adj[static_cast<std::size_t>(v) * n + static_cast<std::size_t>(s)]) {
      ++total_closures[static_cast<std::size_t>(depth)];
      for (int u : path) ++node_closures[static_cast<std::size_t>(u)][static_cast<std::size_t>(depth)];
    }
    if (depth == 6) return;
    for (int w : nbrs[static_cast<std::size_t>(v)]) {
      if (w <= s || onpath[static_cast<std::size_t>(w)]) continue;
      path.push_back(w);
      onpath[static_cast<std::size_t>(w)] = 1;
      extend(s, w);
      onpath[static_cast<std::size_t>(w)] = 0;
      path.pop_back();
    }
  };
  for (int s = 0; s < g.n; ++s) {
    path.assign(1, s);
    onpath.assign(n, 0);
    onpath[static_cast<std::size_t>(s)] = 1;
    extend(s, s);
  }

  // Connected components by DFS; every component of maximum size is marked.
  std::vector<int> comp(n, -1);
  std::vector<long> comp_size;
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] >= 0) continue;
    const int c = static_cast<int>(comp_size.size());
    comp_size.push_back(0);
    std::vector<std::size_t> stack = {i};
    comp[i] = c;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      ++comp_size.back();
      for (int w : nbrs[v])
        if (comp[static_cast<std::size_t>(w)] < 0) {
          comp[static_cast<std::size_t>(w)] = c;
          stack.push_back(static_cast<std::size_t>(w));
        }
    }
  }
  const long max_size = comp_size.empty() ? 0 : *std::max_element(comp_size.begin(), comp_size.end());

  AuxFeatures out;
  out.n = n;
  out.node_aux.assign(n * AuxFeatures::kNodeDim, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    out.node_aux[i * 4 + 0] = static_cast<double>(node_closures[i][3] / 2);
    out.node_aux[i * 4 + 1] = static_cast<double>(node_closures[i][4] / 2);
    out.node_aux[i * 4 + 2] = static_cast<double>(node_closures[i][5] / 2);
    out.node_aux[i * 4 + 3] = comp_size[static_cast<std::size_t>(comp[i])] == max_size ? 1.0 : 0.0;
  }

  out.global_aux.assign(AuxFeatures::kGlobalDim, 0.0);
  for (std::size_t len = 3; len <= 6; ++len)
    out.global_aux[len - 3] = static_cast<double>(total_closures[len] / 2);
  out.global_aux[4] = static_cast<double>(comp_size.size());

  if (n > 0) {
    std::vector<double> lap(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      lap[i * n + i] = static_cast<double>(nbrs[i].size());
      for (int w : nbrs[i]) lap[i * n + static_cast<std::size_t>(w)] = -1.0;
    }
    const std::vector<double> eig = symmetric_eigenvalues(std::move(lap), n);
    // The zero eigenvalue has multiplicity equal to the component count, so
    // skipping that many entries leaves exactly the nonzero spectrum.
    const std::size_t skip = comp_size.size();
    for (std::size_t k = 0; k < 5 && skip + k < eig.size(); ++k)
      out.global_aux[5 + k] = eig[skip + k];
  }
  out.global_aux[10] = t / horizon;
  return out;
}

}  // namespace graphdiff
