// Compares the serial reference kernels against the OpenMP kernels: verifies
// bit-identical outputs, then reports timings for the convolution, the
// feature extraction, and the full pipeline.

#include <omp.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>

#include "liteie/enhance.hpp"
#include "liteie/net.hpp"
#include "liteie/serial.hpp"

using namespace liteie;

namespace {

double time_ms(const std::function<void()>& fn, int runs) {
  double best = 1e300;
  for (int i = 0; i < runs; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

bool bits_equal(const ImageTensor& a, const ImageTensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data.data(), b.data.data(),
                     a.size() * sizeof(float)) == 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"serial vs OpenMP kernel comparison"};
  int width = 1920, height = 1080, runs = 5, threads = omp_get_max_threads();
  std::string topology = "3-1-3";
  app.add_option("--width", width);
  app.add_option("--height", height);
  app.add_option("--runs", runs);
  app.add_option("--threads", threads);
  app.add_option("--topology", topology);
  CLI11_PARSE(app, argc, argv);

  NetTopology topo = parse_topology(topology);
  Weights w = init_weights(topo, 1);
  EnhanceConfig cfg;

  ImageTensor img(height, width, 3);
  std::mt19937_64 rng(7);
  for (auto& v : img.data)
    v = static_cast<float>(static_cast<double>(rng() >> 11) * 0x1.0p-53);

  omp_set_num_threads(threads);
  std::printf("image %dx%d, topology %s, %d OpenMP thread(s)\n", width, height,
              topology.c_str(), threads);

  ImageTensor conv_serial =
      serial::conv3x3_same(img, w.blocks[0].kernel, w.blocks[0].bias);
  ImageTensor conv_parallel =
      conv3x3_same(img, w.blocks[0].kernel, w.blocks[0].bias);
  ImageTensor pipe_serial = serial::enhance_image(w, img, cfg);
  ImageTensor pipe_parallel = enhance_image(w, img, cfg);
  std::printf("bitwise identical: conv=%s pipeline=%s\n",
              bits_equal(conv_serial, conv_parallel) ? "yes" : "NO",
              bits_equal(pipe_serial, pipe_parallel) ? "yes" : "NO");
  if (!bits_equal(conv_serial, conv_parallel) ||
      !bits_equal(pipe_serial, pipe_parallel))
    return 1;

  double conv_s = time_ms(
      [&] { serial::conv3x3_same(img, w.blocks[0].kernel, w.blocks[0].bias); },
      runs);
  double conv_p = time_ms(
      [&] { conv3x3_same(img, w.blocks[0].kernel, w.blocks[0].bias); }, runs);
  double feat_s = time_ms([&] { serial::extract_features(w, img); }, runs);
  double feat_p = time_ms([&] { extract_features(w, img); }, runs);
  double pipe_s = time_ms([&] { serial::enhance_image(w, img, cfg); }, runs);
  double pipe_p = time_ms([&] { enhance_image(w, img, cfg); }, runs);

  std::printf("%-18s %10s %10s %8s\n", "kernel", "serial_ms", "omp_ms", "speedup");
  std::printf("%-18s %10.2f %10.2f %8.2f\n", "conv3x3", conv_s, conv_p,
              conv_s / conv_p);
  std::printf("%-18s %10.2f %10.2f %8.2f\n", "extract_features", feat_s, feat_p,
              feat_s / feat_p);
  std::printf("%-18s %10.2f %10.2f %8.2f\n", "full pipeline", pipe_s, pipe_p,
              pipe_s / pipe_p);
  return 0;
}
