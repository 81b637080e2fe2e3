#include "liteie/bench.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <vector>

#include "liteie/errors.hpp"

namespace liteie {

long long flops_estimate(const NetTopology& t, int height, int width, int T,
                         bool irm) {
  validate_topology(t);
  if (height < 1 || width < 1 || T < 0)
    throw InvalidArgument("flops_estimate: bad dimensions");

  long long pixels = static_cast<long long>(height) * width;
  long long macs_per_px = 0;
  for (int b = 0; b < t.blocks(); ++b)
    macs_per_px += static_cast<long long>(t.channel_widths[b]) *
                   t.channel_widths[b + 1] * 9;
  long long conv = 2 * pixels * macs_per_px * 3;  // three stage applications
  long long elem = pixels * 3 * T * (6 + (irm ? 15 : 0));
  return conv + elem;
}

BenchReport time_pipeline(const Weights& w, int height, int width,
                          const EnhanceConfig& cfg, int runs, int warmup,
                          int threads) {
  if (runs < 1) throw InvalidArgument("time_pipeline: runs must be >= 1");
  if (warmup < 0) throw InvalidArgument("time_pipeline: warmup must be >= 0");
  if (height < 1 || width < 1)
    throw InvalidArgument("time_pipeline: bad resolution");
  if (threads < 1) throw InvalidArgument("time_pipeline: threads must be >= 1");

  ImageTensor img(height, width, 3);
  std::mt19937_64 rng(42);
  for (auto& v : img.data)
    v = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);

  int saved = omp_get_max_threads();
  omp_set_num_threads(threads);

  volatile float sink = 0;  // keep the optimizer from dropping the work
  for (int i = 0; i < warmup; ++i) {
    ImageTensor out = enhance_image(w, img, cfg);
    sink = sink + out.data[0];
  }

  std::vector<double> times;
  times.reserve(runs);
  for (int i = 0; i < runs; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    ImageTensor out = enhance_image(w, img, cfg);
    auto t1 = std::chrono::steady_clock::now();
    sink = sink + out.data[0];
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  omp_set_num_threads(saved);

  std::sort(times.begin(), times.end());
  BenchReport r;
  r.topology = w.topology;
  r.height = height;
  r.width = width;
  r.iterations = cfg.iterations;
  r.flops = flops_estimate(w.topology, height, width, cfg.iterations,
                           cfg.irm_enabled);
  r.median_ms = times[times.size() / 2];
  r.best_ms = times.front();
  std::size_t p95_idx = static_cast<std::size_t>(
      std::ceil(0.95 * static_cast<double>(times.size()))) - 1;
  r.p95_ms = times[std::min(p95_idx, times.size() - 1)];
  r.fps = 1000.0 / r.median_ms;
  r.runs = runs;
  r.threads = threads;
  return r;
}

}  // namespace liteie
