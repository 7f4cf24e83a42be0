#include "graphdiff/backbone.hpp"

#include <cmath>
#include <stdexcept>

namespace graphdiff {

Var film(Tape& t, Var x, Var y, const FilmVars& p) {
  if (t.rows(x) != t.rows(y) || t.cols(x) != t.cols(y))
    throw std::invalid_argument("film: x and y shapes differ");
  Var l1 = t.broadcast_add(t.matmul(x, p.w1), p.b1);
  Var l2 = t.broadcast_add(t.matmul(x, p.w2), p.b2);
  return t.add(t.add(l1, t.mul(l2, y)), y);
}

Var film_bcast(Tape& t, Var x, Var y_row, const FilmVars& p) {
  if (t.rows(y_row) != 1 || t.cols(x) != t.cols(y_row))
    throw std::invalid_argument("film_bcast: conditioner must be 1 x cols(x)");
  Var l1 = t.broadcast_add(t.matmul(x, p.w1), p.b1);
  Var l2 = t.broadcast_add(t.matmul(x, p.w2), p.b2);
  return t.broadcast_add(t.add(l1, t.broadcast_mul(l2, y_row)), y_row);
}

Var mlp2(Tape& t, Var x, const MlpVars& p, double dropout, Rng* rng) {
  Var h = t.relu(t.broadcast_add(t.matmul(x, p.w1), p.b1));
  if (rng != nullptr && dropout > 0.0) h = t.dropout(h, dropout, *rng, true);
  return t.broadcast_add(t.matmul(h, p.w2), p.b2);
}

Var pna(Tape& t, Var set, const MlpVars& p, double dropout, Rng* rng) {
  Var lo = t.reduce_min(set);
  Var hi = t.reduce_max(set);
  Var mean = t.reduce_mean(set);
  Var sd = t.reduce_std(set);
  Var cat = t.concat_cols(t.concat_cols(lo, hi), t.concat_cols(mean, sd));
  return mlp2(t, cat, p, dropout, rng);
}

MpnnState mpnn_layer(Tape& t, const MpnnState& s, const LayerVars& p, std::size_t n,
                     double dropout, Rng* rng) {
  if (n == 0 || t.rows(s.nodes) != n)
    throw std::invalid_argument("mpnn_layer: node count mismatch");
  const std::size_t h = t.cols(s.nodes);
  const std::size_t P = pair_count(n);
  const bool edges = s.has_edges && n >= 2;
  if (edges && (t.rows(s.edges) != P || t.cols(s.edges) != h))
    throw std::invalid_argument("mpnn_layer: edge shape mismatch");

  Var msg;
  if (edges) {
    // Mean of the incident pair embeddings, diagonal excluded: node i sees
    // every pair {i, j}, j != i, weighted 1/(n-1).
    std::vector<double> agg(n * P, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::size_t k = pair_index(n, i, j);
        agg[i * P + k] = agg[j * P + k] = 1.0 / static_cast<double>(n - 1);
      }
    msg = t.matmul(t.leaf(n, P, agg), s.edges);
  } else {
    msg = t.leaf(n, h, std::vector<double>(n * h, 0.0));
  }

  MpnnState out;
  out.has_edges = s.has_edges;
  Var m = mlp2(t, msg, p.msg, dropout, rng);
  out.nodes = film_bcast(t, film(t, s.nodes, m, p.node_inner), s.global, p.node_outer);

  out.edges = s.edges;
  if (edges) {
    std::vector<std::size_t> ri, rj;
    ri.reserve(P);
    rj.reserve(P);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        ri.push_back(i);
        rj.push_back(j);
      }
    Var prod = t.mul(t.gather_rows(out.nodes, ri), t.gather_rows(out.nodes, rj));
    out.edges = film_bcast(t, film(t, s.edges, prod, p.edge_inner), s.global, p.edge_outer);
  }

  Var npna = pna(t, out.nodes, p.node_pna, dropout, rng);
  Var eset = edges ? out.edges : t.leaf(1, h, std::vector<double>(h, 0.0));
  Var epna = pna(t, eset, p.edge_pna, dropout, rng);
  out.global = t.add(s.global, t.add(npna, epna));
  return out;
}

namespace {

// Walks the parameter list in the order the constructor laid it down.
struct VarCursor {
  const std::vector<Var>& leaves;
  std::size_t k = 0;
  Var next() { return leaves[k++]; }
  MlpVars mlp() {
    MlpVars v;
    v.w1 = next();
    v.b1 = next();
    v.w2 = next();
    v.b2 = next();
    return v;
  }
  FilmVars film() {
    FilmVars v;
    v.w1 = next();
    v.b1 = next();
    v.w2 = next();
    v.b2 = next();
    return v;
  }
};

void add_mlp(std::vector<Parameter>& ps, const std::string& base, std::size_t in,
             std::size_t hidden, std::size_t out) {
  ps.emplace_back(base + ".w1", in, hidden);
  ps.emplace_back(base + ".b1", 1, hidden);
  ps.emplace_back(base + ".w2", hidden, out);
  ps.emplace_back(base + ".b2", 1, out);
}

void add_film(std::vector<Parameter>& ps, const std::string& base, std::size_t h) {
  ps.emplace_back(base + ".w1", h, h);
  ps.emplace_back(base + ".b1", 1, h);
  ps.emplace_back(base + ".w2", h, h);
  ps.emplace_back(base + ".b2", 1, h);
}

bool is_weight(const Parameter& p) {
  const std::size_t dot = p.name.rfind('.');
  return dot != std::string::npos && p.name[dot + 1] == 'w';
}

}  // namespace

DenoiserModel::DenoiserModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.node_classes < 1) throw std::invalid_argument("model: node_classes must be >= 1");
  if (cfg.edge_classes < 2) throw std::invalid_argument("model: edge_classes must be >= 2");
  if (cfg.hidden < 1) throw std::invalid_argument("model: hidden must be >= 1");
  if (cfg.layers < 1) throw std::invalid_argument("model: layers must be >= 1");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw std::invalid_argument("model: dropout outside [0,1)");
  if (!(cfg.horizon > 0.0)) throw std::invalid_argument("model: horizon must be positive");

  const std::size_t h = static_cast<std::size_t>(cfg.hidden);
  const std::size_t b = static_cast<std::size_t>(cfg.node_classes);
  const std::size_t e = static_cast<std::size_t>(cfg.edge_classes);

  add_mlp(params_, "node_in", b + AuxFeatures::kNodeDim, h, h);
  add_mlp(params_, "edge_in", e, h, h);
  add_mlp(params_, "glob_in", AuxFeatures::kGlobalDim, h, h);
  for (int l = 0; l < cfg.layers; ++l) {
    const std::string base = "layer" + std::to_string(l);
    add_mlp(params_, base + ".msg", h, h, h);
    add_film(params_, base + ".node_inner", h);
    add_film(params_, base + ".node_outer", h);
    add_film(params_, base + ".edge_inner", h);
    add_film(params_, base + ".edge_outer", h);
    add_mlp(params_, base + ".node_pna", 4 * h, h, h);
    add_mlp(params_, base + ".edge_pna", 4 * h, h, h);
  }
  add_mlp(params_, "node_out", h, h, b);
  add_mlp(params_, "edge_out", h, h, e);

  // Per-tensor child streams make the draw sequence independent of layout
  // changes elsewhere. Biases start at zero.
  Rng root(seed);
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter& p = params_[k];
    if (!is_weight(p)) continue;
    Rng stream = root.child(k);
    const double s = std::sqrt(6.0 / static_cast<double>(p.rows + p.cols));
    for (double& v : p.value) v = stream.uniform(-s, s);
  }
}

std::vector<Parameter*> DenoiserModel::param_ptrs() {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (Parameter& p : params_) out.push_back(&p);
  return out;
}

Parameter* DenoiserModel::find(const std::string& name) {
  for (Parameter& p : params_)
    if (p.name == name) return &p;
  return nullptr;
}

ForwardResult DenoiserModel::forward(Tape& t, const CategoricalGraph& g, double time,
                                     Rng* dropout_rng) const {
  if (params_.empty()) throw std::logic_error("forward: model not initialized");
  if (!(time >= 0.0) || time > cfg_.horizon)
    throw std::invalid_argument("forward: time outside [0, horizon]");
  validate_graph(g, cfg_.node_classes, cfg_.edge_classes);
  if (g.n < 1) throw std::invalid_argument("forward: empty graph");

  const std::size_t n = static_cast<std::size_t>(g.n);
  const std::size_t h = static_cast<std::size_t>(cfg_.hidden);
  const std::size_t b = static_cast<std::size_t>(cfg_.node_classes);
  const std::size_t e = static_cast<std::size_t>(cfg_.edge_classes);
  const std::size_t P = pair_count(n);

  ForwardResult r;
  r.leaves.reserve(params_.size());
  for (const Parameter& p : params_) r.leaves.push_back(t.leaf(p));
  VarCursor cur{r.leaves, 0};
  const MlpVars node_in = cur.mlp();
  const MlpVars edge_in = cur.mlp();
  const MlpVars glob_in = cur.mlp();
  std::vector<LayerVars> layers(static_cast<std::size_t>(cfg_.layers));
  for (LayerVars& lv : layers) {
    lv.msg = cur.mlp();
    lv.node_inner = cur.film();
    lv.node_outer = cur.film();
    lv.edge_inner = cur.film();
    lv.edge_outer = cur.film();
    lv.node_pna = cur.mlp();
    lv.edge_pna = cur.mlp();
  }
  const MlpVars node_out = cur.mlp();
  const MlpVars edge_out = cur.mlp();

  const AuxFeatures aux = compute_aux(g, time, cfg_.horizon);

  // Count-like features pass through log1p so magnitudes stay O(1); the
  // component indicator and normalized time are already in [0,1].
  std::vector<double> nf(n * (b + AuxFeatures::kNodeDim), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double* row = &nf[i * (b + AuxFeatures::kNodeDim)];
    row[static_cast<std::size_t>(g.node_types[i])] = 1.0;
    row[b + 0] = std::log1p(aux.node_aux[i * 4 + 0]);
    row[b + 1] = std::log1p(aux.node_aux[i * 4 + 1]);
    row[b + 2] = std::log1p(aux.node_aux[i * 4 + 2]);
    row[b + 3] = aux.node_aux[i * 4 + 3];
  }
  std::vector<double> gf(AuxFeatures::kGlobalDim);
  for (std::size_t k = 0; k < 10; ++k) gf[k] = std::log1p(aux.global_aux[k]);
  gf[10] = aux.global_aux[10];

  const double drop = cfg_.dropout;
  MpnnState s;
  s.nodes = mlp2(t, t.leaf(n, b + AuxFeatures::kNodeDim, nf), node_in, drop, dropout_rng);
  s.global = mlp2(t, t.leaf(1, AuxFeatures::kGlobalDim, gf), glob_in, drop, dropout_rng);
  s.has_edges = P > 0;
  if (s.has_edges) {
    std::vector<double> ef(P * e, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const std::size_t k = pair_index(n, i, j);
        ef[k * e + static_cast<std::size_t>(g.edge(static_cast<int>(i), static_cast<int>(j)))] = 1.0;
      }
    s.edges = mlp2(t, t.leaf(P, e, ef), edge_in, drop, dropout_rng);
  } else {
    s.edges = t.leaf(1, h, std::vector<double>(h, 0.0));
  }

  for (const LayerVars& lv : layers) s = mpnn_layer(t, s, lv, n, drop, dropout_rng);

  // One logit row per unordered pair: the (i,j)/(j,i) symmetrization is
  // exact because both directions read the same row.
  r.node_probs = t.softmax_rows(mlp2(t, s.nodes, node_out, drop, dropout_rng));
  r.has_edges = s.has_edges;
  if (s.has_edges)
    r.edge_probs = t.softmax_rows(mlp2(t, s.edges, edge_out, drop, dropout_rng));
  return r;
}

CleanPrediction DenoiserModel::predict_clean(const CategoricalGraph& g, double time) const {
  Tape t;
  const ForwardResult f = forward(t, g, time, nullptr);
  CleanPrediction out;
  out.n = static_cast<std::size_t>(g.n);
  out.node_classes = cfg_.node_classes;
  out.edge_classes = cfg_.edge_classes;
  out.node_probs = t.value(f.node_probs);
  if (f.has_edges) out.edge_probs = t.value(f.edge_probs);
  return out;
}

}  // namespace graphdiff
