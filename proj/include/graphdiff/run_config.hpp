#pragma once

#include <cstdint>
#include <string>

#include "graphdiff/noise.hpp"

namespace graphdiff {

// One run, four sections. Text format: `[section]` headers, `key = value`
// lines, `#` comments. Unknown sections or keys are rejected by name.
//
//   [noise]   alpha, gamma, T, reference (uniform | marginal)
//   [model]   layers, hidden, dropout
//   [train]   lr, weight_decay, batch_size, epochs, seed
//   [sample]  steps, count, seed
struct RunConfig {
  double alpha = 1.0;
  double gamma = 5.0;
  double horizon = 1.0;
  RefKind reference = RefKind::kMarginal;

  int layers = 3;
  int hidden = 64;
  double dropout = 0.1;

  double learning_rate = 2e-4;
  double weight_decay = 0.0;
  int batch_size = 8;
  int epochs = 10;
  std::uint64_t train_seed = 0;

  int sample_steps = 100;
  int sample_count = 1;
  std::uint64_t sample_seed = 0;
};

// `source` names the config in error messages (usually the file path).
RunConfig parse_run_config(const std::string& text, const std::string& source);
RunConfig load_run_config(const std::string& path);

}  // namespace graphdiff
