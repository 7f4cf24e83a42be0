#include "graphdiff/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphdiff {

namespace {
constexpr double kLogFloor = 1e-12;
constexpr double kStdEps = 1e-8;
}  // namespace

Tape::Node& Tape::node(Var v) {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: var does not belong to this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id < 0 || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("tape: var does not belong to this tape");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Var Tape::make(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("tape: empty shape");
  Node n;
  n.rows = rows;
  n.cols = cols;
  n.value.assign(rows * cols, 0.0);
  n.grad.assign(rows * cols, 0.0);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::check_same_shape(const Node& a, const Node& b, const char* op) {
  if (a.rows != b.rows || a.cols != b.cols)
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

Var Tape::leaf(std::size_t rows, std::size_t cols, const std::vector<double>& values) {
  if (values.size() != rows * cols)
    throw std::invalid_argument("leaf: value size does not match shape");
  Var v = make(rows, cols);
  node(v).value = values;
  return v;
}

double Tape::scalar_value(Var v) const {
  const Node& n = node(v);
  if (n.rows != 1 || n.cols != 1)
    throw std::invalid_argument("scalar_value: not a scalar");
  return n.value[0];
}

Var Tape::add(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  check_same_shape(na, nb, "add");
  Var out = make(na.rows, na.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i)
    no.value[i] = na.value[i] + nb.value[i];
  no.back = [a, b, out](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& ga = t.node(a).grad;
    auto& gb = t.node(b).grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] += g[i];
    }
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  check_same_shape(na, nb, "sub");
  Var out = make(na.rows, na.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i)
    no.value[i] = na.value[i] - nb.value[i];
  no.back = [a, b, out](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& ga = t.node(a).grad;
    auto& gb = t.node(b).grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i];
      gb[i] -= g[i];
    }
  };
  return out;
}

Var Tape::mul(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  check_same_shape(na, nb, "mul");
  Var out = make(na.rows, na.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i)
    no.value[i] = na.value[i] * nb.value[i];
  no.back = [a, b, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& va = t.node(a).value;
    const auto& vb = t.node(b).value;
    auto& ga = t.node(a).grad;
    auto& gb = t.node(b).grad;
    for (std::size_t i = 0; i < g.size(); ++i) {
      ga[i] += g[i] * vb[i];
      gb[i] += g[i] * va[i];
    }
  };
  return out;
}

Var Tape::matmul(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.cols != nb.rows) throw std::invalid_argument("matmul: shape mismatch");
  const std::size_t R = na.rows, K = na.cols, C = nb.cols;
  Var out = make(R, C);
  Node& no = node(out);
  for (std::size_t i = 0; i < R; ++i) {
    const double* arow = &na.value[i * K];
    double* orow = &no.value[i * C];
    for (std::size_t k = 0; k < K; ++k) {
      const double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &nb.value[k * C];
      for (std::size_t j = 0; j < C; ++j) orow[j] += aik * brow[j];
    }
  }
  no.back = [a, b, out, R, K, C](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& va = t.node(a).value;
    const auto& vb = t.node(b).value;
    auto& ga = t.node(a).grad;
    auto& gb = t.node(b).grad;
    // dA += g B^T
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t k = 0; k < K; ++k) {
        double acc = 0.0;
        const double* grow = &g[i * C];
        const double* brow = &vb[k * C];
        for (std::size_t j = 0; j < C; ++j) acc += grow[j] * brow[j];
        ga[i * K + k] += acc;
      }
    // dB += A^T g
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t i = 0; i < R; ++i) {
        const double aik = va[i * K + k];
        if (aik == 0.0) continue;
        const double* grow = &g[i * C];
        double* gbrow = &gb[k * C];
        for (std::size_t j = 0; j < C; ++j) gbrow[j] += aik * grow[j];
      }
  };
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  const Node &na = node(a), &nb = node(b);
  if (na.rows != nb.rows) throw std::invalid_argument("concat_cols: row mismatch");
  const std::size_t R = na.rows, Ca = na.cols, Cb = nb.cols;
  Var out = make(R, Ca + Cb);
  Node& no = node(out);
  for (std::size_t i = 0; i < R; ++i) {
    std::copy_n(&na.value[i * Ca], Ca, &no.value[i * (Ca + Cb)]);
    std::copy_n(&nb.value[i * Cb], Cb, &no.value[i * (Ca + Cb) + Ca]);
  }
  no.back = [a, b, out, R, Ca, Cb](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& ga = t.node(a).grad;
    auto& gb = t.node(b).grad;
    for (std::size_t i = 0; i < R; ++i) {
      for (std::size_t j = 0; j < Ca; ++j) ga[i * Ca + j] += g[i * (Ca + Cb) + j];
      for (std::size_t j = 0; j < Cb; ++j) gb[i * Cb + j] += g[i * (Ca + Cb) + Ca + j];
    }
  };
  return out;
}

Var Tape::relu(Var x) {
  const Node& nx = node(x);
  Var out = make(nx.rows, nx.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i)
    no.value[i] = nx.value[i] > 0.0 ? nx.value[i] : 0.0;
  no.back = [x, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& vx = t.node(x).value;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (vx[i] > 0.0) gx[i] += g[i];
  };
  return out;
}

Var Tape::sigmoid(Var x) {
  const Node& nx = node(x);
  Var out = make(nx.rows, nx.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i)
    no.value[i] = 1.0 / (1.0 + std::exp(-nx.value[i]));
  no.back = [x, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& y = t.node(out).value;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i] * (1.0 - y[i]);
  };
  return out;
}

Var Tape::exp(Var x) {
  const Node& nx = node(x);
  Var out = make(nx.rows, nx.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i) no.value[i] = std::exp(nx.value[i]);
  no.back = [x, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& y = t.node(out).value;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * y[i];
  };
  return out;
}

Var Tape::log(Var x) {
  const Node& nx = node(x);
  for (double v : nx.value)
    if (!(v > 0.0)) throw std::domain_error("log: nonpositive input");
  Var out = make(nx.rows, nx.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i) no.value[i] = std::log(nx.value[i]);
  no.back = [x, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& vx = t.node(x).value;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / vx[i];
  };
  return out;
}

Var Tape::log_floored(Var x) {
  const Node& nx = node(x);
  Var out = make(nx.rows, nx.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i)
    no.value[i] = std::log(std::max(nx.value[i], kLogFloor));
  no.back = [x, out](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& vx = t.node(x).value;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (vx[i] > kLogFloor) gx[i] += g[i] / vx[i];
  };
  return out;
}

Var Tape::softmax_rows(Var x) {
  const Node& nx = node(x);
  const std::size_t R = nx.rows, C = nx.cols;
  Var out = make(R, C);
  Node& no = node(out);
  for (std::size_t i = 0; i < R; ++i) {
    const double* row = &nx.value[i * C];
    double m = row[0];
    for (std::size_t j = 1; j < C; ++j) m = std::max(m, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < C; ++j) z += std::exp(row[j] - m);
    for (std::size_t j = 0; j < C; ++j) no.value[i * C + j] = std::exp(row[j] - m) / z;
  }
  no.back = [x, out, R, C](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& y = t.node(out).value;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < R; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < C; ++j) dot += g[i * C + j] * y[i * C + j];
      for (std::size_t j = 0; j < C; ++j)
        gx[i * C + j] += (g[i * C + j] - dot) * y[i * C + j];
    }
  };
  return out;
}

Var Tape::scale(Var x, double c) {
  const Node& nx = node(x);
  Var out = make(nx.rows, nx.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i) no.value[i] = c * nx.value[i];
  no.back = [x, out, c](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += c * g[i];
  };
  return out;
}

Var Tape::broadcast_add(Var m, Var row) {
  const Node &nm = node(m), &nr = node(row);
  if (nr.rows != 1 || nr.cols != nm.cols)
    throw std::invalid_argument("broadcast_add: row must be 1 x cols");
  const std::size_t R = nm.rows, C = nm.cols;
  Var out = make(R, C);
  Node& no = node(out);
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j)
      no.value[i * C + j] = nm.value[i * C + j] + nr.value[j];
  no.back = [m, row, out, R, C](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gm = t.node(m).grad;
    auto& gr = t.node(row).grad;
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < C; ++j) {
        gm[i * C + j] += g[i * C + j];
        gr[j] += g[i * C + j];
      }
  };
  return out;
}

Var Tape::broadcast_mul(Var m, Var row) {
  const Node &nm = node(m), &nr = node(row);
  if (nr.rows != 1 || nr.cols != nm.cols)
    throw std::invalid_argument("broadcast_mul: row must be 1 x cols");
  const std::size_t R = nm.rows, C = nm.cols;
  Var out = make(R, C);
  Node& no = node(out);
  for (std::size_t i = 0; i < R; ++i)
    for (std::size_t j = 0; j < C; ++j)
      no.value[i * C + j] = nm.value[i * C + j] * nr.value[j];
  no.back = [m, row, out, R, C](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& vm = t.node(m).value;
    const auto& vr = t.node(row).value;
    auto& gm = t.node(m).grad;
    auto& gr = t.node(row).grad;
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < C; ++j) {
        gm[i * C + j] += g[i * C + j] * vr[j];
        gr[j] += g[i * C + j] * vm[i * C + j];
      }
  };
  return out;
}

Var Tape::reduce_mean(Var x) {
  const Node& nx = node(x);
  const std::size_t R = nx.rows, C = nx.cols;
  Var out = make(1, C);
  Node& no = node(out);
  for (std::size_t j = 0; j < C; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < R; ++i) s += nx.value[i * C + j];
    no.value[j] = s / static_cast<double>(R);
  }
  no.back = [x, out, R, C](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < R; ++i)
      for (std::size_t j = 0; j < C; ++j)
        gx[i * C + j] += g[j] / static_cast<double>(R);
  };
  return out;
}

Var Tape::reduce_std(Var x) {
  const Node& nx = node(x);
  const std::size_t R = nx.rows, C = nx.cols;
  Var out = make(1, C);
  Node& no = node(out);
  std::vector<double> mean(C, 0.0);
  for (std::size_t j = 0; j < C; ++j) {
    for (std::size_t i = 0; i < R; ++i) mean[j] += nx.value[i * C + j];
    mean[j] /= static_cast<double>(R);
    double msd = 0.0;
    for (std::size_t i = 0; i < R; ++i) {
      const double d = nx.value[i * C + j] - mean[j];
      msd += d * d;
    }
    msd /= static_cast<double>(R);
    no.value[j] = std::sqrt(msd + kStdEps);
  }
  no.back = [x, out, R, C, mean](Tape& t) {
    const auto& g = t.node(out).grad;
    const auto& y = t.node(out).value;
    const auto& vx = t.node(x).value;
    auto& gx = t.node(x).grad;
    for (std::size_t j = 0; j < C; ++j) {
      const double f = g[j] / (static_cast<double>(R) * y[j]);
      for (std::size_t i = 0; i < R; ++i)
        gx[i * C + j] += f * (vx[i * C + j] - mean[j]);
    }
  };
  return out;
}

Var Tape::reduce_min(Var x) {
  const Node& nx = node(x);
  const std::size_t R = nx.rows, C = nx.cols;
  Var out = make(1, C);
  Node& no = node(out);
  std::vector<std::size_t> arg(C, 0);
  for (std::size_t j = 0; j < C; ++j) {
    double best = nx.value[j];
    for (std::size_t i = 1; i < R; ++i)
      if (nx.value[i * C + j] < best) {  // strict: ties keep the lowest row
        best = nx.value[i * C + j];
        arg[j] = i;
      }
    no.value[j] = best;
  }
  no.back = [x, out, C, arg](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t j = 0; j < C; ++j) gx[arg[j] * C + j] += g[j];
  };
  return out;
}

Var Tape::reduce_max(Var x) {
  const Node& nx = node(x);
  const std::size_t R = nx.rows, C = nx.cols;
  Var out = make(1, C);
  Node& no = node(out);
  std::vector<std::size_t> arg(C, 0);
  for (std::size_t j = 0; j < C; ++j) {
    double best = nx.value[j];
    for (std::size_t i = 1; i < R; ++i)
      if (nx.value[i * C + j] > best) {
        best = nx.value[i * C + j];
        arg[j] = i;
      }
    no.value[j] = best;
  }
  no.back = [x, out, C, arg](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t j = 0; j < C; ++j) gx[arg[j] * C + j] += g[j];
  };
  return out;
}

Var Tape::sum_all(Var x) {
  const Node& nx = node(x);
  Var out = make(1, 1);
  Node& no = node(out);
  double s = 0.0;
  for (double v : nx.value) s += v;
  no.value[0] = s;
  no.back = [x, out](Tape& t) {
    const double g = t.node(out).grad[0];
    auto& gx = t.node(x).grad;
    for (double& v : gx) v += g;
  };
  return out;
}

Var Tape::gather_rows(Var x, std::vector<std::size_t> rows) {
  const Node& nx = node(x);
  if (rows.empty()) throw std::invalid_argument("gather_rows: empty index list");
  for (std::size_t r : rows)
    if (r >= nx.rows) throw std::invalid_argument("gather_rows: index out of range");
  const std::size_t C = nx.cols;
  Var out = make(rows.size(), C);
  Node& no = node(out);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(&nx.value[rows[i] * C], C, &no.value[i * C]);
  no.back = [x, out, C, rows = std::move(rows)](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < C; ++j) gx[rows[i] * C + j] += g[i * C + j];
  };
  return out;
}

Var Tape::dropout(Var x, double rate, Rng& rng, bool enabled) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate outside [0,1)");
  const Node& nx = node(x);
  if (!enabled || rate == 0.0) {
    // Inference behaves as identity and draws nothing.
    Var out = make(nx.rows, nx.cols);
    Node& no = node(out);
    no.value = nx.value;
    no.back = [x, out](Tape& t) {
      const auto& g = t.node(out).grad;
      auto& gx = t.node(x).grad;
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    };
    return out;
  }
  const double keep = 1.0 - rate;
  std::vector<double> mask(nx.value.size());
  for (double& m : mask) m = rng.uniform() < keep ? 1.0 / keep : 0.0;
  Var out = make(nx.rows, nx.cols);
  Node& no = node(out);
  for (std::size_t i = 0; i < no.value.size(); ++i)
    no.value[i] = nx.value[i] * mask[i];
  no.back = [x, out, mask = std::move(mask)](Tape& t) {
    const auto& g = t.node(out).grad;
    auto& gx = t.node(x).grad;
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
  };
  return out;
}

Var Tape::softmax_ce(Var logits, int target) {
  const Node& nl = node(logits);
  if (nl.rows != 1) throw std::invalid_argument("softmax_ce: logits must be 1 x C");
  if (target < 0 || target >= static_cast<int>(nl.cols))
    throw std::invalid_argument("softmax_ce: target out of range");
  const std::size_t C = nl.cols;
  double m = nl.value[0];
  for (std::size_t j = 1; j < C; ++j) m = std::max(m, nl.value[j]);
  double z = 0.0;
  for (std::size_t j = 0; j < C; ++j) z += std::exp(nl.value[j] - m);
  Var out = make(1, 1);
  Node& no = node(out);
  no.value[0] = std::log(z) + m - nl.value[static_cast<std::size_t>(target)];
  no.back = [logits, out, target, m, z, C](Tape& t) {
    const double g = t.node(out).grad[0];
    const auto& vl = t.node(logits).value;
    auto& gl = t.node(logits).grad;
    for (std::size_t j = 0; j < C; ++j) {
      const double p = std::exp(vl[j] - m) / z;
      gl[j] += g * (p - (static_cast<int>(j) == target ? 1.0 : 0.0));
    }
  };
  return out;
}

Var Tape::ce_from_probs(Var probs, const std::vector<int>& targets) {
  const Node& np = node(probs);
  if (targets.size() != np.rows)
    throw std::invalid_argument("ce_from_probs: one target per row required");
  const std::size_t C = np.cols;
  std::vector<double> terms(np.rows);
  for (std::size_t r = 0; r < np.rows; ++r) {
    const int k = targets[r];
    if (k < 0 || k >= static_cast<int>(C))
      throw std::invalid_argument("ce_from_probs: target out of range");
    terms[r] = -std::log(std::max(np.value[r * C + k], kLogFloor));
  }
  // Value-sorted accumulation: the sum is a function of the term multiset
  // only, so permuting rows changes no bits.
  std::vector<double> sorted = terms;
  std::sort(sorted.begin(), sorted.end());
  double total = 0.0;
  for (double v : sorted) total += v;

  Var out = make(1, 1);
  Node& no = node(out);
  no.value[0] = total;
  no.back = [probs, out, C, targets](Tape& t) {
    const double g = t.node(out).grad[0];
    const auto& vp = t.node(probs).value;
    auto& gp = t.node(probs).grad;
    for (std::size_t r = 0; r < targets.size(); ++r) {
      const double p = vp[r * C + static_cast<std::size_t>(targets[r])];
      if (p > kLogFloor) gp[r * C + static_cast<std::size_t>(targets[r])] -= g / p;
    }
  };
  return out;
}

Var Tape::sum_terms(const std::vector<Var>& terms) {
  if (terms.empty()) throw std::invalid_argument("sum_terms: empty");
  double total = 0.0;
  for (Var v : terms) {
    const Node& n = node(v);
    if (n.rows != 1 || n.cols != 1)
      throw std::invalid_argument("sum_terms: terms must be scalars");
    total += n.value[0];
  }
  Var out = make(1, 1);
  Node& no = node(out);
  no.value[0] = total;
  no.back = [terms, out](Tape& t) {
    const double g = t.node(out).grad[0];
    for (Var v : terms) t.node(v).grad[0] += g;
  };
  return out;
}

void Tape::backward(Var loss) {
  if (backward_done_)
    throw std::logic_error("backward: tape already differentiated; reset first");
  Node& nl = node(loss);
  if (nl.rows != 1 || nl.cols != 1)
    throw std::invalid_argument("backward: loss must be a scalar");
  backward_done_ = true;
  nl.grad[0] = 1.0;
  for (std::size_t i = nodes_.size(); i-- > 0;)
    if (nodes_[i].back) nodes_[i].back(*this);
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

double grad_check(const std::function<double()>& loss_value,
                  const std::function<void()>& compute_grads,
                  std::vector<Parameter*> params, double h,
                  int samples_per_tensor) {
  if (!(h > 0.0)) throw std::invalid_argument("grad_check: h must be positive");
  compute_grads();
  double worst = 0.0;
  for (Parameter* p : params) {
    const std::size_t n = p->size();
    std::size_t stride = 1;
    if (samples_per_tensor > 0 && n > static_cast<std::size_t>(samples_per_tensor))
      stride = (n + samples_per_tensor - 1) / samples_per_tensor;
    for (std::size_t i = 0; i < n; i += stride) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = loss_value();
      p->value[i] = saved - h;
      const double down = loss_value();
      p->value[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double an = p->grad[i];
      const double rel = std::abs(an - fd) / (std::abs(an) + std::abs(fd) + 1e-8);
      if (rel > worst) worst = rel;
    }
  }
  return worst;
}

}  // namespace graphdiff
