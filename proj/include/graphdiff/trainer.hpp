#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "graphdiff/backbone.hpp"
#include "graphdiff/graph.hpp"
#include "graphdiff/noise.hpp"
#include "graphdiff/tape.hpp"

namespace graphdiff {

struct TrainConfig {
  double learning_rate = 2e-4;
  double weight_decay = 0.0;
  double dropout = 0.1;  // installed into the model config at construction
  int batch_size = 8;
  int epochs = 10;
  double alpha = 1.0;  // schedule preset
  double gamma = 5.0;
  RefKind reference = RefKind::kMarginal;
  std::uint64_t seed = 0;
};

// Sum of node and pair cross entropies against the clean graph, natural log,
// probabilities floored at 1e-12. Terms accumulate in value-sorted order, so
// the value is bit-identical under a shared permutation of graph and
// predictions.
Var ce_loss(Tape& t, const CategoricalGraph& g0, const ForwardResult& pred);

// Scale all gradients by max_norm/|g| when the concatenated global norm |g|
// exceeds max_norm.
void clip_global_norm(const std::vector<Parameter*>& params, double max_norm);

// Adam (beta1 0.9, beta2 0.999, eps 1e-8, bias-corrected) with decoupled
// weight decay applied as theta *= 1 - lr*wd before the step. step is
// 1-based. A non-finite gradient aborts naming the parameter.
void optimizer_update(const std::vector<Parameter*>& params, double lr,
                      double weight_decay, long step);

// One-graph-at-a-time training: per graph draw t ~ U(0, horizon), corrupt,
// forward with dropout, cross entropy; batch loss is the mean over graphs.
class Trainer {
 public:
  Trainer(DenoiserModel& model, const TrainConfig& cfg,
          const RateMatrixSpec& node_spec, const RateMatrixSpec& edge_spec,
          const NoiseSchedule& sched);

  // Runs one optimizer step on the batch, returns the mean loss.
  double train_step(const std::vector<CategoricalGraph>& batch);
  long step() const { return step_; }

 private:
  DenoiserModel& model_;
  TrainConfig cfg_;
  RateMatrixSpec node_spec_, edge_spec_;
  NoiseSchedule sched_;
  Rng rng_;
  long step_ = 0;
};

struct LoadedCheckpoint {
  DenoiserModel model;
  TrainConfig train;
  RateMatrixSpec node_spec, edge_spec;
  NoiseSchedule sched;
  SizeDistribution sizes;
  long step = 0;
};

// Container: "GDCK", uint64 little-endian JSON header length, JSON header
// (format_version, configs, marginals, size counts, array directory), then
// the raw float64 arrays row-major. Parameter bytes round-trip exactly.
void save_checkpoint(const std::string& path, const DenoiserModel& model,
                     const TrainConfig& cfg, const RateMatrixSpec& node_spec,
                     const RateMatrixSpec& edge_spec, const NoiseSchedule& sched,
                     const SizeDistribution& sizes, long step);
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace graphdiff
