#include "graphdiff/tiny_oracle.hpp"

#include <cmath>
#include <stdexcept>

namespace graphdiff {

TinySystem::TinySystem(int n, RateMatrixSpec node_spec, RateMatrixSpec edge_spec,
                       NoiseSchedule sched)
    : n_(n),
      node_spec_(std::move(node_spec)),
      edge_spec_(std::move(edge_spec)),
      sched_(sched) {
  if (n_ < 1 || n_ > 2) throw std::invalid_argument("TinySystem: n must be 1 or 2");
  for (int i = 0; i < n_; ++i) dims_.push_back(node_spec_.dim);
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j) dims_.push_back(edge_spec_.dim);

  states_ = 1;
  for (int d : dims_) {
    states_ *= d;
    if (states_ > 64) throw std::invalid_argument("TinySystem: more than 64 joint states");
  }
  strides_.assign(dims_.size(), 1);
  for (int c = static_cast<int>(dims_.size()) - 2; c >= 0; --c)
    strides_[c] = strides_[c + 1] * dims_[c + 1];

  // Kronecker sum: each component contributes jumps that change it alone.
  const Matrix rn = base_rate_matrix(node_spec_);
  const Matrix re = base_rate_matrix(edge_spec_);
  gen_ = Matrix(static_cast<std::size_t>(states_), static_cast<std::size_t>(states_));
  for (long x = 0; x < states_; ++x) {
    for (std::size_t c = 0; c < dims_.size(); ++c) {
      const Matrix& r = (static_cast<int>(c) < n_) ? rn : re;
      const int cur = static_cast<int>(x / strides_[c]) % dims_[c];
      for (int v = 0; v < dims_[c]; ++v) {
        const long y = x + (v - cur) * strides_[c];
        gen_.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) +=
            r.at(static_cast<std::size_t>(cur), static_cast<std::size_t>(v));
      }
    }
  }
}

long TinySystem::graph_to_state(const CategoricalGraph& g) const {
  if (g.n != n_) throw std::invalid_argument("graph_to_state: node count mismatch");
  long state = 0;
  std::size_t c = 0;
  for (int i = 0; i < n_; ++i, ++c) state += g.node_types[i] * strides_[c];
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j, ++c) state += g.edge(i, j) * strides_[c];
  return state;
}

CategoricalGraph TinySystem::state_to_graph(long state) const {
  if (state < 0 || state >= states_)
    throw std::invalid_argument("state_to_graph: state out of range");
  CategoricalGraph g(n_);
  std::size_t c = 0;
  for (int i = 0; i < n_; ++i, ++c)
    g.node_types[i] = static_cast<int>(state / strides_[c]) % dims_[c];
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j, ++c)
      g.set_edge(i, j, static_cast<int>(state / strides_[c]) % dims_[c]);
  return g;
}

std::vector<double> TinySystem::reference() const {
  std::vector<double> ref(static_cast<std::size_t>(states_), 1.0);
  const std::vector<double> pn = node_spec_.stationary();
  const std::vector<double> pe = edge_spec_.stationary();
  for (long x = 0; x < states_; ++x) {
    for (std::size_t c = 0; c < dims_.size(); ++c) {
      const int v = static_cast<int>(x / strides_[c]) % dims_[c];
      ref[x] *= (static_cast<int>(c) < n_) ? pn[v] : pe[v];
    }
  }
  return ref;
}

void TinySystem::check_dist(const std::vector<double>& p0) const {
  if (static_cast<long>(p0.size()) != states_)
    throw std::invalid_argument("TinySystem: distribution has wrong length");
  double sum = 0.0;
  for (double v : p0) {
    if (v < 0.0) throw std::invalid_argument("TinySystem: negative probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("TinySystem: distribution does not sum to 1");
}

std::vector<double> TinySystem::marginal_at(const std::vector<double>& p0,
                                            double t) const {
  check_dist(p0);
  const double c = cumulative_rate(sched_, 0.0, t);
  const Matrix q = series_matrix_exp(gen_, c);
  std::vector<double> out(static_cast<std::size_t>(states_), 0.0);
  for (long x = 0; x < states_; ++x) {
    if (p0[x] == 0.0) continue;
    for (long y = 0; y < states_; ++y)
      out[y] += p0[x] * q.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
  }
  return out;
}

Matrix TinySystem::posterior_at(const std::vector<double>& p0, double t) const {
  check_dist(p0);
  const double c = cumulative_rate(sched_, 0.0, t);
  const Matrix q = series_matrix_exp(gen_, c);
  std::vector<double> qt(static_cast<std::size_t>(states_), 0.0);
  for (long x0 = 0; x0 < states_; ++x0)
    for (long xt = 0; xt < states_; ++xt)
      qt[xt] += p0[x0] * q.at(static_cast<std::size_t>(x0), static_cast<std::size_t>(xt));

  Matrix post(static_cast<std::size_t>(states_), static_cast<std::size_t>(states_));
  for (long xt = 0; xt < states_; ++xt) {
    if (qt[xt] <= 0.0) continue;
    for (long x0 = 0; x0 < states_; ++x0)
      post.at(static_cast<std::size_t>(xt), static_cast<std::size_t>(x0)) =
          q.at(static_cast<std::size_t>(x0), static_cast<std::size_t>(xt)) * p0[x0] / qt[xt];
  }
  return post;
}

Matrix TinySystem::reverse_rates_at(const std::vector<double>& p0, double t) const {
  const std::vector<double> qt = marginal_at(p0, t);
  const double b = sched_.beta(t);
  Matrix rate(static_cast<std::size_t>(states_), static_cast<std::size_t>(states_));
  for (long x = 0; x < states_; ++x) {
    if (qt[x] <= 0.0) continue;
    for (long y = 0; y < states_; ++y) {
      if (y == x) continue;
      rate.at(static_cast<std::size_t>(x), static_cast<std::size_t>(y)) =
          qt[y] / qt[x] * b *
          gen_.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
    }
  }
  return rate;
}

std::vector<std::vector<double>> TinySystem::component_posterior(
    const std::vector<double>& p0, double t, long state) const {
  if (state < 0 || state >= states_)
    throw std::invalid_argument("component_posterior: state out of range");
  const Matrix post = posterior_at(p0, t);
  std::vector<std::vector<double>> out(dims_.size());
  for (std::size_t c = 0; c < dims_.size(); ++c)
    out[c].assign(static_cast<std::size_t>(dims_[c]), 0.0);
  for (long x0 = 0; x0 < states_; ++x0) {
    const double p = post.at(static_cast<std::size_t>(state), static_cast<std::size_t>(x0));
    if (p == 0.0) continue;
    for (std::size_t c = 0; c < dims_.size(); ++c) {
      const int v = static_cast<int>(x0 / strides_[c]) % dims_[c];
      out[c][v] += p;
    }
  }
  return out;
}

TinyOracleResult tiny_joint_oracle(const TinySystem& sys,
                                   const std::vector<double>& data_dist,
                                   double t) {
  TinyOracleResult res;
  res.marginal = sys.marginal_at(data_dist, t);
  res.posterior = sys.posterior_at(data_dist, t);
  res.reverse_rates = sys.reverse_rates_at(data_dist, t);
  return res;
}

}  // namespace graphdiff
