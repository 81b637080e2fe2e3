#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "liteie/enhance.hpp"
#include "liteie/losses.hpp"
#include "liteie/net.hpp"

namespace liteie {

struct TrainConfig {
  int steps = 2000;
  int batch_size = 8;
  int patch = 256;
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  LossConfig loss;
  EnhanceConfig enhance;
  int checkpoint_every = 0;        // 0 disables periodic checkpoints
  std::string checkpoint_prefix;   // checkpoint files: <prefix>.step<N>
};

struct AdamState {
  std::vector<double> m, v;
  long t = 0;
};

// Standard bias-corrected Adam update, in place.
void adam_step(std::vector<double>& params, const std::vector<double>& grad,
               AdamState& state, const TrainConfig& cfg);

struct TrainResult {
  Weights weights;
  std::vector<std::string> log_lines;  // "step, total, L_exp, L_tv, L_mscol"
};

// Unsupervised loop: sample a batch of random crops, run the pipeline,
// differentiate the loss, apply Adam. Deterministic for a given config.
// log_stream (when given) receives each log line as it is produced.
TrainResult train(const std::string& dataset_dir, const NetTopology& topo,
                  const TrainConfig& cfg, std::ostream* log_stream = nullptr);

}  // namespace liteie
