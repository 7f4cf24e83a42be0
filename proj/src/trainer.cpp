#include "graphdiff/trainer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace graphdiff {

Var ce_loss(Tape& t, const CategoricalGraph& g0, const ForwardResult& pred) {
  const std::size_t n = static_cast<std::size_t>(g0.n);
  if (n == 0) throw std::invalid_argument("ce_loss: empty graph");
  if (t.rows(pred.node_probs) != n)
    throw std::invalid_argument("ce_loss: node probability shape mismatch");
  Var nl = t.ce_from_probs(pred.node_probs, g0.node_types);
  if (n < 2) return nl;
  const std::size_t P = pair_count(n);
  if (!pred.has_edges || t.rows(pred.edge_probs) != P)
    throw std::invalid_argument("ce_loss: edge probability shape mismatch");
  std::vector<int> edge_targets(P);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      edge_targets[pair_index(n, i, j)] =
          g0.edge(static_cast<int>(i), static_cast<int>(j));
  Var el = t.ce_from_probs(pred.edge_probs, edge_targets);
  return t.add(nl, el);
}

void clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params)
    for (double g : p->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm <= max_norm || norm == 0.0) return;
  const double s = max_norm / norm;
  for (Parameter* p : params)
    for (double& g : p->grad) g *= s;
}

void optimizer_update(const std::vector<Parameter*>& params, double lr,
                      double weight_decay, long step) {
  if (step < 1) throw std::invalid_argument("optimizer_update: step must be >= 1");
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step));
  for (Parameter* p : params) {
    for (double g : p->grad)
      if (!std::isfinite(g))
        throw std::runtime_error("training aborted: non-finite gradient in parameter '" +
                                 p->name + "'");
    if (p->adam_m.size() != p->size()) p->adam_m.assign(p->size(), 0.0);
    if (p->adam_v.size() != p->size()) p->adam_v.assign(p->size(), 0.0);
    for (std::size_t i = 0; i < p->size(); ++i) {
      p->value[i] *= 1.0 - lr * weight_decay;  // decoupled decay first
      const double g = p->grad[i];
      p->adam_m[i] = b1 * p->adam_m[i] + (1.0 - b1) * g;
      p->adam_v[i] = b2 * p->adam_v[i] + (1.0 - b2) * g * g;
      const double mhat = p->adam_m[i] / c1;
      const double vhat = p->adam_v[i] / c2;
      p->value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

Trainer::Trainer(DenoiserModel& model, const TrainConfig& cfg,
                 const RateMatrixSpec& node_spec, const RateMatrixSpec& edge_spec,
                 const NoiseSchedule& sched)
    : model_(model),
      cfg_(cfg),
      node_spec_(node_spec),
      edge_spec_(edge_spec),
      sched_(sched),
      rng_(cfg.seed) {
  if (node_spec_.dim != model_.config().node_classes ||
      edge_spec_.dim != model_.config().edge_classes)
    throw std::invalid_argument("trainer: rate matrix dims do not match the model");
  if (sched_.horizon != model_.config().horizon)
    throw std::invalid_argument("trainer: schedule horizon differs from the model");
  if (cfg_.learning_rate < 0.0 || cfg_.batch_size < 1)
    throw std::invalid_argument("trainer: bad config");
}

double Trainer::train_step(const std::vector<CategoricalGraph>& batch) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const double B = static_cast<double>(batch.size());
  std::vector<Parameter*> params = model_.param_ptrs();
  for (Parameter* p : params) p->grad.assign(p->size(), 0.0);

  double total = 0.0;
  for (std::size_t k = 0; k < batch.size(); ++k) {
    // One child stream per graph covers the time draw, the corruption draws,
    // and dropout, so the step is reproducible from (seed, step, k).
    Rng grng = rng_.child(static_cast<std::uint64_t>(step_) * 1000003ULL + k);
    const double tdraw = grng.uniform(0.0, sched_.horizon);
    const CategoricalGraph gt =
        corrupt_graph(batch[k], tdraw, node_spec_, edge_spec_, sched_, grng);
    Tape tape;
    const ForwardResult f = model_.forward(tape, gt, tdraw, &grng);
    Var loss = ce_loss(tape, batch[k], f);
    total += tape.scalar_value(loss);
    tape.backward(tape.scale(loss, 1.0 / B));
    for (std::size_t j = 0; j < params.size(); ++j) {
      const std::vector<double>& g = tape.grad(f.leaves[j]);
      for (std::size_t i = 0; i < g.size(); ++i) params[j]->grad[i] += g[i];
    }
  }

  clip_global_norm(params, 10.0);
  ++step_;
  optimizer_update(params, cfg_.learning_rate, cfg_.weight_decay, step_);
  return total / B;
}

namespace {

const char kMagic[4] = {'G', 'D', 'C', 'K'};
constexpr int kFormatVersion = 1;

std::string ref_name(RefKind k) {
  return k == RefKind::kUniform ? "uniform" : "marginal";
}

RefKind ref_from_name(const std::string& s) {
  if (s == "uniform") return RefKind::kUniform;
  if (s == "marginal") return RefKind::kMarginal;
  throw std::runtime_error("checkpoint: unknown reference kind '" + s + "'");
}

nlohmann::json spec_to_json(const RateMatrixSpec& s) {
  nlohmann::json j;
  j["kind"] = ref_name(s.kind);
  j["dim"] = s.dim;
  j["marginal"] = s.marginal;
  return j;
}

RateMatrixSpec spec_from_json(const nlohmann::json& j) {
  const RefKind kind = ref_from_name(j.at("kind").get<std::string>());
  if (kind == RefKind::kUniform) return RateMatrixSpec::uniform(j.at("dim").get<int>());
  return RateMatrixSpec::make_marginal(j.at("marginal").get<std::vector<double>>());
}

}  // namespace

void save_checkpoint(const std::string& path, const DenoiserModel& model,
                     const TrainConfig& cfg, const RateMatrixSpec& node_spec,
                     const RateMatrixSpec& edge_spec, const NoiseSchedule& sched,
                     const SizeDistribution& sizes, long step) {
  nlohmann::json h;
  h["format_version"] = kFormatVersion;
  const ModelConfig& mc = model.config();
  h["model"] = {{"node_classes", mc.node_classes}, {"edge_classes", mc.edge_classes},
                {"hidden", mc.hidden},             {"layers", mc.layers},
                {"dropout", mc.dropout},           {"horizon", mc.horizon}};
  h["train"] = {{"learning_rate", cfg.learning_rate},
                {"weight_decay", cfg.weight_decay},
                {"dropout", cfg.dropout},
                {"batch_size", cfg.batch_size},
                {"epochs", cfg.epochs},
                {"alpha", cfg.alpha},
                {"gamma", cfg.gamma},
                {"reference", ref_name(cfg.reference)},
                {"seed", cfg.seed}};
  h["noise"] = {{"alpha", sched.alpha},
                {"gamma", sched.gamma},
                {"horizon", sched.horizon},
                {"node_spec", spec_to_json(node_spec)},
                {"edge_spec", spec_to_json(edge_spec)}};
  nlohmann::json sz = nlohmann::json::array();
  for (const auto& [size, count] : sizes.counts()) sz.push_back({size, count});
  h["sizes"] = sz;
  h["step"] = step;

  nlohmann::json dir = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const Parameter& p : model.params()) {
    dir.push_back({{"name", p.name}, {"rows", p.rows}, {"cols", p.cols}, {"offset", offset}});
    offset += p.size() * sizeof(double);
  }
  h["arrays"] = dir;

  const std::string header = h.dump();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
  out.write(kMagic, 4);
  const std::uint64_t len = header.size();
  char lenb[8];
  for (int i = 0; i < 8; ++i) lenb[i] = static_cast<char>((len >> (8 * i)) & 0xff);
  out.write(lenb, 8);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Parameter& p : model.params())
    out.write(reinterpret_cast<const char*>(p.value.data()),
              static_cast<std::streamsize>(p.size() * sizeof(double)));
  if (!out) throw std::runtime_error("checkpoint: write to '" + path + "' failed");
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: '" + path + "' is not a checkpoint file");
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i)
    len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[4 + static_cast<std::size_t>(i)]))
           << (8 * i);
  if (12 + len > bytes.size())
    throw std::runtime_error("checkpoint: truncated header in '" + path + "'");

  nlohmann::json h;
  try {
    h = nlohmann::json::parse(bytes.substr(12, len));
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("checkpoint: corrupt header in '" + path + "'");
  }
  const int version = h.at("format_version").get<int>();
  if (version != kFormatVersion)
    throw std::runtime_error("checkpoint: unsupported format version " +
                             std::to_string(version));

  ModelConfig mc;
  const auto& jm = h.at("model");
  mc.node_classes = jm.at("node_classes").get<int>();
  mc.edge_classes = jm.at("edge_classes").get<int>();
  mc.hidden = jm.at("hidden").get<int>();
  mc.layers = jm.at("layers").get<int>();
  mc.dropout = jm.at("dropout").get<double>();
  mc.horizon = jm.at("horizon").get<double>();

  TrainConfig tc;
  const auto& jt = h.at("train");
  tc.learning_rate = jt.at("learning_rate").get<double>();
  tc.weight_decay = jt.at("weight_decay").get<double>();
  tc.dropout = jt.at("dropout").get<double>();
  tc.batch_size = jt.at("batch_size").get<int>();
  tc.epochs = jt.at("epochs").get<int>();
  tc.alpha = jt.at("alpha").get<double>();
  tc.gamma = jt.at("gamma").get<double>();
  tc.reference = ref_from_name(jt.at("reference").get<std::string>());
  tc.seed = jt.at("seed").get<std::uint64_t>();

  const auto& jn = h.at("noise");
  LoadedCheckpoint out{
      DenoiserModel(mc, 0),
      tc,
      spec_from_json(jn.at("node_spec")),
      spec_from_json(jn.at("edge_spec")),
      NoiseSchedule(jn.at("alpha").get<double>(), jn.at("gamma").get<double>(),
                    jn.at("horizon").get<double>()),
      SizeDistribution(),
      h.at("step").get<long>()};

  std::map<int, long> counts;
  for (const auto& pair : h.at("sizes"))
    counts[pair.at(0).get<int>()] = pair.at(1).get<long>();
  if (!counts.empty()) out.sizes = SizeDistribution(counts);

  const std::size_t array_base = 12 + len;
  for (const auto& entry : h.at("arrays")) {
    const std::string name = entry.at("name").get<std::string>();
    const std::size_t rows = entry.at("rows").get<std::size_t>();
    const std::size_t cols = entry.at("cols").get<std::size_t>();
    const std::uint64_t offset = entry.at("offset").get<std::uint64_t>();
    Parameter* p = out.model.find(name);
    if (p == nullptr || p->rows != rows || p->cols != cols)
      throw std::runtime_error("checkpoint: array '" + name +
                               "' does not match the model layout");
    const std::size_t need = rows * cols * sizeof(double);
    if (array_base + offset + need > bytes.size())
      throw std::runtime_error("checkpoint: truncated array data in '" + path + "'");
    std::memcpy(p->value.data(), bytes.data() + array_base + offset, need);
  }
  return out;
}

}  // namespace graphdiff
