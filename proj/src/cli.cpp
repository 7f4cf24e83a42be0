#include "graphdiff/cli.hpp"

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "graphdiff/backbone.hpp"
#include "graphdiff/dataset.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/metrics.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/rng.hpp"
#include "graphdiff/run_config.hpp"
#include "graphdiff/sampler.hpp"
#include "graphdiff/trainer.hpp"

namespace graphdiff {

namespace {

// Exit code 1: flag/config/content validation. Exit code 2: file access.
struct ExitError {
  int code;
  std::string message;
};

void require_readable(const std::string& path, const std::string& flag) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) {
    throw ExitError{2, "cannot open " + path + " (from " + flag + ")"};
  }
}

// Maps write-side runtime errors (disk full, unwritable directory) to exit
// code 2; content validation keeps its invalid_argument type and exits 1.
template <typename Fn>
void write_or_exit2(Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::runtime_error& e) {
    throw ExitError{2, e.what()};
  }
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f.good()) throw ExitError{2, "cannot open " + path};
  std::uint64_t hash = 14695981039346656037ULL;
  char buf[4096];
  while (f.read(buf, sizeof(buf)) || f.gcount() > 0) {
    for (std::streamsize i = 0; i < f.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 1099511628211ULL;
    }
    if (!f) break;
  }
  return hash;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

struct SpecPair {
  RateMatrixSpec node;
  RateMatrixSpec edge;
};

// Alphabet sizes come from the largest type present; the edge alphabet is
// floored at two so the absent/present dynamics are never degenerate.
// Marginals are count-and-normalize over all nodes / all unordered pairs.
SpecPair estimate_specs(const std::vector<CategoricalGraph>& graphs,
                        RefKind kind) {
  int node_dim = 1;
  int edge_dim = 2;
  for (const auto& g : graphs) {
    for (int t : g.node_types) node_dim = std::max(node_dim, t + 1);
    for (int i = 0; i < g.n; ++i)
      for (int j = i + 1; j < g.n; ++j)
        edge_dim = std::max(edge_dim, g.edge(i, j) + 1);
  }
  if (kind == RefKind::kUniform) {
    return {RateMatrixSpec::uniform(node_dim), RateMatrixSpec::uniform(edge_dim)};
  }

  std::vector<double> node_counts(static_cast<std::size_t>(node_dim), 0.0);
  std::vector<double> edge_counts(static_cast<std::size_t>(edge_dim), 0.0);
  double nodes_total = 0.0;
  double pairs_total = 0.0;
  for (const auto& g : graphs) {
    for (int t : g.node_types) {
      node_counts[static_cast<std::size_t>(t)] += 1.0;
      nodes_total += 1.0;
    }
    for (int i = 0; i < g.n; ++i) {
      for (int j = i + 1; j < g.n; ++j) {
        edge_counts[static_cast<std::size_t>(g.edge(i, j))] += 1.0;
        pairs_total += 1.0;
      }
    }
  }
  if (nodes_total == 0.0) {
    throw std::invalid_argument("training data contains no nodes");
  }
  if (pairs_total == 0.0) {
    throw std::invalid_argument("training data contains no node pairs");
  }
  for (double& c : node_counts) c /= nodes_total;
  for (double& c : edge_counts) c /= pairs_total;
  return {RateMatrixSpec::make_marginal(node_counts),
          RateMatrixSpec::make_marginal(edge_counts)};
}

int run_dataset(const std::string& kind, int count, std::uint64_t seed,
                const std::string& out) {
  DatasetSpec spec;
  if (kind == "community") {
    spec.kind = DatasetKind::kCommunity;
  } else if (kind == "sbm") {
    spec.kind = DatasetKind::kSbm;
  } else {
    throw ExitError{1, "--kind must be 'community' or 'sbm', got '" + kind + "'"};
  }
  if (count < 0) throw ExitError{1, "--count must be nonnegative"};
  spec.count = count;
  spec.seed = seed;

  const auto graphs = generate_dataset(spec);
  write_or_exit2([&] { write_jsonl(out, graphs); });
  std::cout << "wrote " << graphs.size() << " graphs to " << out << "\n";
  return 0;
}

int run_train(const std::string& config_path, const std::string& data_path,
              const std::string& ckpt_path, const std::string& log_path) {
  RunConfig rc;
  if (!config_path.empty()) {
    require_readable(config_path, "--config");
    rc = load_run_config(config_path);
  }
  require_readable(data_path, "--data");
  const auto graphs = read_jsonl(data_path);
  if (graphs.empty()) {
    throw ExitError{1, "training set " + data_path + " is empty"};
  }

  const SpecPair specs = estimate_specs(graphs, rc.reference);
  const NoiseSchedule sched(rc.alpha, rc.gamma, rc.horizon);
  const SizeDistribution sizes = fit_size_distribution(graphs);

  ModelConfig mc;
  mc.node_classes = specs.node.dim;
  mc.edge_classes = specs.edge.dim;
  mc.hidden = rc.hidden;
  mc.layers = rc.layers;
  mc.dropout = rc.dropout;
  mc.horizon = rc.horizon;

  TrainConfig tc;
  tc.learning_rate = rc.learning_rate;
  tc.weight_decay = rc.weight_decay;
  tc.dropout = rc.dropout;
  tc.batch_size = rc.batch_size;
  tc.epochs = rc.epochs;
  tc.alpha = rc.alpha;
  tc.gamma = rc.gamma;
  tc.reference = rc.reference;
  tc.seed = rc.train_seed;

  // Init and step streams come from the same seed but different roots, so
  // weight draws never alias the per-step corruption draws.
  DenoiserModel model(mc, rc.train_seed ^ 0x9e3779b97f4a7c15ULL);
  Trainer trainer(model, tc, specs.node, specs.edge, sched);

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::binary);
    if (!log.good()) throw ExitError{2, "cannot open " + log_path + " (from --log)"};
    log << "step,epoch,mean_loss\n";
  }

  const Rng order_root(rc.train_seed);
  std::vector<int> order(graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (int epoch = 1; epoch <= rc.epochs; ++epoch) {
    Rng shuffle_rng =
        order_root.child((1ULL << 63) ^ static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(order);

    double epoch_loss = 0.0;
    long epoch_steps = 0;
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(rc.batch_size)) {
      const std::size_t end =
          std::min(order.size(), at + static_cast<std::size_t>(rc.batch_size));
      std::vector<CategoricalGraph> batch;
      batch.reserve(end - at);
      for (std::size_t i = at; i < end; ++i) {
        batch.push_back(graphs[static_cast<std::size_t>(order[i])]);
      }
      const double loss = trainer.train_step(batch);
      epoch_loss += loss;
      ++epoch_steps;
      if (log.is_open()) {
        char row[96];
        std::snprintf(row, sizeof(row), "%ld,%d,%.17g\n", trainer.step(), epoch,
                      loss);
        log << row;
      }
    }
    std::cout << "epoch " << epoch << "/" << rc.epochs << " mean_loss "
              << (epoch_loss / static_cast<double>(epoch_steps)) << "\n";
  }

  if (log.is_open()) {
    log.flush();
    if (!log.good()) throw ExitError{2, "write failed on " + log_path};
  }
  write_or_exit2([&] {
    save_checkpoint(ckpt_path, model, tc, specs.node, specs.edge, sched, sizes,
                    trainer.step());
  });
  std::cout << "saved checkpoint to " << ckpt_path << "\n";
  return 0;
}

int run_sample(const std::string& ckpt_path, const std::string& config_path,
               const std::string& out, int num, bool num_set, int steps,
               bool steps_set, std::uint64_t seed, bool seed_set,
               const std::string& reference, double alpha, bool alpha_set,
               double gamma, bool gamma_set, bool force) {
  RunConfig rc;
  if (!config_path.empty()) {
    require_readable(config_path, "--config");
    rc = load_run_config(config_path);
  }
  require_readable(ckpt_path, "--ckpt");
  LoadedCheckpoint ckpt = load_checkpoint(ckpt_path);

  SamplerConfig scfg;
  scfg.steps = steps_set ? steps : rc.sample_steps;
  scfg.num_samples = num_set ? num : rc.sample_count;
  scfg.seed = seed_set ? seed : rc.sample_seed;
  scfg.sizes = ckpt.sizes;
  if (scfg.steps < 1) throw ExitError{1, "--steps must be >= 1"};
  if (scfg.num_samples < 0) throw ExitError{1, "--num must be nonnegative"};
  if (scfg.sizes.empty()) {
    throw ExitError{1, "checkpoint " + ckpt_path + " carries no size distribution"};
  }

  // Noise overrides must agree with the checkpoint unless forced.
  RefKind ref_kind = ckpt.node_spec.kind;
  if (!reference.empty()) {
    RefKind requested;
    if (reference == "uniform") {
      requested = RefKind::kUniform;
    } else if (reference == "marginal") {
      requested = RefKind::kMarginal;
    } else {
      throw ExitError{1, "--reference must be 'uniform' or 'marginal', got '" +
                             reference + "'"};
    }
    if (requested != ckpt.node_spec.kind && !force) {
      throw ExitError{
          1, "--reference does not match the checkpoint's reference kind; "
             "pass --force to override"};
    }
    ref_kind = requested;
  }
  double use_alpha = ckpt.sched.alpha;
  double use_gamma = ckpt.sched.gamma;
  if (alpha_set && alpha != ckpt.sched.alpha && !force) {
    throw ExitError{1, "--alpha does not match the checkpoint's schedule; "
                       "pass --force to override"};
  }
  if (gamma_set && gamma != ckpt.sched.gamma && !force) {
    throw ExitError{1, "--gamma does not match the checkpoint's schedule; "
                       "pass --force to override"};
  }
  if (alpha_set) use_alpha = alpha;
  if (gamma_set) use_gamma = gamma;

  RateMatrixSpec node_spec = ckpt.node_spec;
  RateMatrixSpec edge_spec = ckpt.edge_spec;
  if (ref_kind != ckpt.node_spec.kind) {
    if (ref_kind == RefKind::kUniform) {
      node_spec = RateMatrixSpec::uniform(ckpt.node_spec.dim);
      edge_spec = RateMatrixSpec::uniform(ckpt.edge_spec.dim);
    } else {
      throw ExitError{1, "checkpoint stores no marginal estimates; cannot "
                         "switch the reference to marginal"};
    }
  }

  NoiseSchedule sched = ckpt.sched;
  if (use_alpha != sched.alpha || use_gamma != sched.gamma) {
    try {
      sched = NoiseSchedule(use_alpha, use_gamma, ckpt.sched.horizon);
    } catch (const std::invalid_argument& e) {
      throw ExitError{1, e.what()};
    }
  }

  const auto graphs = generate(model_posterior(ckpt.model), node_spec,
                               edge_spec, sched, scfg);
  write_or_exit2([&] { write_jsonl(out, graphs); });

  nlohmann::json meta;
  meta["seed"] = scfg.seed;
  meta["steps"] = scfg.steps;
  meta["checkpoint_hash"] = hex64(fnv1a64_file(ckpt_path));
  const std::string meta_path = out + ".meta.json";
  std::ofstream mf(meta_path, std::ios::binary);
  if (!mf.good()) throw ExitError{2, "cannot open " + meta_path};
  mf << meta.dump(2) << "\n";
  if (!mf.good()) throw ExitError{2, "write failed on " + meta_path};

  std::cout << "wrote " << graphs.size() << " graphs to " << out
            << " (sidecar " << meta_path << ")\n";
  return 0;
}

int run_eval(const std::string& gen_path, const std::string& train_path,
             const std::string& test_path, const std::string& out,
             const std::string& metrics) {
  EvalSelection sel;
  if (!metrics.empty()) {
    sel = EvalSelection{false, false, false};
    std::istringstream ss(metrics);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (token == "deg") {
        sel.degree = true;
      } else if (token == "clus") {
        sel.clustering = true;
      } else if (token == "orbit") {
        sel.orbit4 = true;
      } else {
        throw ExitError{1, "unknown metric '" + token +
                               "' (expected deg, clus, orbit)"};
      }
    }
  }

  require_readable(gen_path, "--gen");
  require_readable(train_path, "--train");
  require_readable(test_path, "--test");
  const auto gen = read_jsonl(gen_path);
  const auto train = read_jsonl(train_path);
  const auto test = read_jsonl(test_path);
  if (gen.empty()) throw ExitError{1, "empty generated set in " + gen_path};
  if (train.empty()) throw ExitError{1, "empty training set in " + train_path};
  if (test.empty()) throw ExitError{1, "empty test set in " + test_path};

  const EvalReport report = evaluate(gen, train, test, sel);
  std::ofstream rf(out, std::ios::binary);
  if (!rf.good()) throw ExitError{2, "cannot open " + out + " (from --out)"};
  rf << report_json(report) << "\n";
  if (!rf.good()) throw ExitError{2, "write failed on " + out};

  std::cout << "wrote report to " << out << "\n";
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"categorical graph diffusion: data, training, sampling, eval"};
  app.require_subcommand(1);

  std::string ds_kind;
  int ds_count = 0;
  std::uint64_t ds_seed = 0;
  std::string ds_out;
  auto* ds = app.add_subcommand("dataset", "generate a synthetic graph set");
  ds->add_option("--kind", ds_kind, "community | sbm")->required();
  ds->add_option("--count", ds_count, "number of graphs")->required();
  ds->add_option("--seed", ds_seed, "generator seed");
  ds->add_option("--out", ds_out, "output JSONL path")->required();

  std::string tr_config;
  std::string tr_data;
  std::string tr_out;
  std::string tr_log;
  auto* tr = app.add_subcommand("train", "train a denoiser on a JSONL set");
  tr->add_option("--config", tr_config, "run config file");
  tr->add_option("--data", tr_data, "training JSONL path")->required();
  tr->add_option("--out", tr_out, "checkpoint output path")->required();
  tr->add_option("--log", tr_log, "CSV loss log path");

  std::string sm_ckpt;
  std::string sm_config;
  std::string sm_out;
  int sm_num = 1;
  int sm_steps = 100;
  std::uint64_t sm_seed = 0;
  std::string sm_reference;
  double sm_alpha = 0.0;
  double sm_gamma = 0.0;
  bool sm_force = false;
  auto* sm = app.add_subcommand("sample", "generate graphs from a checkpoint");
  sm->add_option("--ckpt", sm_ckpt, "checkpoint path")->required();
  sm->add_option("--config", sm_config, "run config file");
  auto* sm_num_opt = sm->add_option("--num", sm_num, "number of samples");
  auto* sm_steps_opt = sm->add_option("--steps", sm_steps, "leap steps");
  auto* sm_seed_opt = sm->add_option("--seed", sm_seed, "sampler seed");
  sm->add_option("--reference", sm_reference,
                 "override reference kind (must match checkpoint unless --force)");
  auto* sm_alpha_opt = sm->add_option("--alpha", sm_alpha, "override alpha");
  auto* sm_gamma_opt = sm->add_option("--gamma", sm_gamma, "override gamma");
  sm->add_flag("--force", sm_force, "allow noise overrides that differ");
  sm->add_option("--out", sm_out, "output JSONL path")->required();

  std::string ev_gen;
  std::string ev_train;
  std::string ev_test;
  std::string ev_out;
  std::string ev_metrics;
  auto* ev = app.add_subcommand("eval", "score generated graphs");
  ev->add_option("--gen", ev_gen, "generated JSONL path")->required();
  ev->add_option("--train", ev_train, "training JSONL path")->required();
  ev->add_option("--test", ev_test, "test JSONL path")->required();
  ev->add_option("--out", ev_out, "report JSON path")->required();
  ev->add_option("--metrics", ev_metrics, "subset: deg,clus,orbit");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (ds->parsed()) return run_dataset(ds_kind, ds_count, ds_seed, ds_out);
    if (tr->parsed()) return run_train(tr_config, tr_data, tr_out, tr_log);
    if (sm->parsed()) {
      return run_sample(sm_ckpt, sm_config, sm_out, sm_num,
                        sm_num_opt->count() > 0, sm_steps,
                        sm_steps_opt->count() > 0, sm_seed,
                        sm_seed_opt->count() > 0, sm_reference, sm_alpha,
                        sm_alpha_opt->count() > 0, sm_gamma,
                        sm_gamma_opt->count() > 0, sm_force);
    }
    if (ev->parsed()) return run_eval(ev_gen, ev_train, ev_test, ev_out, ev_metrics);
  } catch (const ExitError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace graphdiff
