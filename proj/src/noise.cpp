#include "graphdiff/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace graphdiff {

RateMatrixSpec RateMatrixSpec::uniform(int dim) {
  if (dim < 1) throw std::invalid_argument("RateMatrixSpec: dim < 1");
  RateMatrixSpec s;
  s.kind = RefKind::kUniform;
  s.dim = dim;
  return s;
}

RateMatrixSpec RateMatrixSpec::make_marginal(std::vector<double> m) {
  if (m.empty()) throw std::invalid_argument("RateMatrixSpec: empty marginal");
  double sum = 0.0;
  for (double v : m) {
    if (v < 0.0) throw std::invalid_argument("RateMatrixSpec: negative marginal entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("RateMatrixSpec: marginal does not sum to 1");
  RateMatrixSpec s;
  s.kind = RefKind::kMarginal;
  s.dim = static_cast<int>(m.size());
  s.marginal = std::move(m);
  return s;
}

std::vector<double> RateMatrixSpec::stationary() const {
  if (kind == RefKind::kMarginal) return marginal;
  return std::vector<double>(static_cast<std::size_t>(dim), 1.0 / dim);
}

NoiseSchedule::NoiseSchedule(double a, double g, double T)
    : alpha(a), gamma(g), horizon(T) {
  if (!(alpha > 0.0)) throw std::invalid_argument("NoiseSchedule: alpha <= 0");
  if (!(gamma > 1.0)) throw std::invalid_argument("NoiseSchedule: gamma <= 1");
  if (!(horizon > 0.0)) throw std::invalid_argument("NoiseSchedule: horizon <= 0");
}

double NoiseSchedule::beta(double t) const {
  return alpha * std::pow(gamma, t) * std::log(gamma);
}

Matrix base_rate_matrix(const RateMatrixSpec& spec) {
  const std::size_t n = static_cast<std::size_t>(spec.dim);
  Matrix r(n, n);
  if (spec.kind == RefKind::kUniform) {
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        r.at(u, v) = (u == v) ? 1.0 - static_cast<double>(n) : 1.0;
  } else {
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        r.at(u, v) = spec.marginal[v] - (u == v ? 1.0 : 0.0);
  }
  return r;
}

double cumulative_rate(const NoiseSchedule& sched, double s, double t) {
  if (s > t) throw std::invalid_argument("cumulative_rate: s > t");
  return sched.alpha * (std::pow(sched.gamma, t) - std::pow(sched.gamma, s));
}

Matrix transition_matrix(const RateMatrixSpec& spec, double c) {
  if (c < 0.0) throw std::invalid_argument("transition_matrix: c < 0");
  const std::size_t n = static_cast<std::size_t>(spec.dim);
  Matrix q(n, n);
  if (spec.kind == RefKind::kUniform) {
    // exp(cR) = e^{-cn} I + (1 - e^{-cn})/n * ones
    const double decay = std::exp(-c * static_cast<double>(n));
    const double off = (1.0 - decay) / static_cast<double>(n);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        q.at(u, v) = off + (u == v ? decay : 0.0);
  } else {
    // exp(cR) = e^{-c} I + (1 - e^{-c}) ones m^T
    const double decay = std::exp(-c);
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v)
        q.at(u, v) = (1.0 - decay) * spec.marginal[v] + (u == v ? decay : 0.0);
  }
  return q;
}

Matrix series_matrix_exp(const Matrix& r, double c) {
  if (r.rows != r.cols) throw std::invalid_argument("series_matrix_exp: not square");
  const std::size_t n = r.rows;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n * n; ++i) a.data[i] = c * r.data[i];

  // Halve until the max-abs row sum is at most 1.
  double norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::abs(a.at(i, j));
    if (s > norm) norm = s;
  }
  int squarings = 0;
  while (norm > 1.0) {
    norm *= 0.5;
    ++squarings;
  }
  const double scale = std::ldexp(1.0, -squarings);
  for (double& v : a.data) v *= scale;

  Matrix sum = Matrix::identity(n);
  Matrix term = Matrix::identity(n);
  for (int k = 1; k <= 400; ++k) {
    term = matmul(term, a);
    for (double& v : term.data) v /= static_cast<double>(k);
    for (std::size_t i = 0; i < n * n; ++i) sum.data[i] += term.data[i];
    if (max_abs(term) < 1e-16) break;
  }
  for (int s = 0; s < squarings; ++s) sum = matmul(sum, sum);
  return sum;
}

CategoricalGraph corrupt_graph(const CategoricalGraph& g0, double t,
                               const RateMatrixSpec& node_spec,
                               const RateMatrixSpec& edge_spec,
                               const NoiseSchedule& sched, Rng& rng) {
  if (t < 0.0 || t > sched.horizon)
    throw std::invalid_argument("corrupt_graph: t outside [0, horizon]");
  validate_graph(g0, node_spec.dim, edge_spec.dim - 1);

  const double c = cumulative_rate(sched, 0.0, t);
  const Matrix qn = transition_matrix(node_spec, c);
  const Matrix qe = transition_matrix(edge_spec, c);

  CategoricalGraph gt(g0.n);
  std::vector<double> row(static_cast<std::size_t>(node_spec.dim));
  for (int i = 0; i < g0.n; ++i) {
    const std::size_t u = static_cast<std::size_t>(g0.node_types[i]);
    for (int v = 0; v < node_spec.dim; ++v) row[v] = qn.at(u, v);
    gt.node_types[i] = rng.categorical(row);
  }
  row.assign(static_cast<std::size_t>(edge_spec.dim), 0.0);
  for (int i = 0; i < g0.n; ++i) {
    for (int j = i + 1; j < g0.n; ++j) {
      const std::size_t u = static_cast<std::size_t>(g0.edge(i, j));
      for (int v = 0; v < edge_spec.dim; ++v) row[v] = qe.at(u, v);
      gt.set_edge(i, j, rng.categorical(row));
    }
  }
  return gt;
}

}  // namespace graphdiff
