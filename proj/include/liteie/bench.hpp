#pragma once

#include "liteie/enhance.hpp"
#include "liteie/net.hpp"

namespace liteie {

struct BenchReport {
  NetTopology topology;
  int height = 0, width = 0;
  int iterations = 0;
  long long flops = 0;
  double median_ms = 0;
  double best_ms = 0;  // robust against scheduler noise, which only adds time
  double p95_ms = 0;
  double fps = 0;  // 1000 / median_ms
  int runs = 0;
  int threads = 1;
};

// Analytic cost model: convolutions count 2 flops per multiply-accumulate
// (H*W*sum(out*in*9) MACs per operator application, three applications);
// per iteration the curve step costs 6 and the restoration step 15 flops
// per pixel per channel. Activations are not counted. The value is a
// comparison metric, exactly linear in pixel count.
long long flops_estimate(const NetTopology& t, int height, int width, int T,
                         bool irm = true);

// Times `runs` full-pipeline calls on a synthetic random image (I/O excluded
// from the timed region) after `warmup` untimed calls.
BenchReport time_pipeline(const Weights& w, int height, int width,
                          const EnhanceConfig& cfg, int runs, int warmup,
                          int threads = 1);

}  // namespace liteie
