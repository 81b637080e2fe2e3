#include <doctest.h>

#include <omp.h>

#include <cstring>
#include <random>

#include "liteie/enhance.hpp"
#include "liteie/net.hpp"
#include "liteie/serial.hpp"
#include "oracles.hpp"

using namespace liteie;

namespace {

bool bitwise_equal(const ImageTensor& a, const ImageTensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data.data(), b.data.data(),
                     a.size() * sizeof(float)) == 0;
}

struct ThreadGuard {
  int saved;
  explicit ThreadGuard(int n) : saved(omp_get_max_threads()) {
    omp_set_num_threads(n);
  }
  ~ThreadGuard() { omp_set_num_threads(saved); }
};

}  // namespace

TEST_CASE("row-parallel convolution is bit-identical to the serial reference") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  for (int trial = 0; trial < 30; ++trial) {
    int h = 1 + static_cast<int>(rng() % 40);
    int w = 1 + static_cast<int>(rng() % 40);
    int ci = 1 + static_cast<int>(rng() % 5);
    int co = 1 + static_cast<int>(rng() % 5);
    ImageTensor in = oracle::random_image(h, w, ci, 100 + trial, -2.0f, 2.0f);
    std::vector<float> kernel(static_cast<std::size_t>(co) * ci * 9);
    std::vector<float> bias(co);
    for (auto& v : kernel) v = dist(rng);
    for (auto& v : bias) v = dist(rng);

    ImageTensor s = serial::conv3x3_same(in, kernel, bias);
    ImageTensor p = conv3x3_same(in, kernel, bias);
    REQUIRE(bitwise_equal(s, p));
  }
}

TEST_CASE("feature extraction and the full pipeline match the serial reference") {
  for (const char* ts : {"3-1-3", "3-8-8-3"}) {
    Weights w = init_weights(parse_topology(ts), 3);
    ImageTensor img = oracle::random_image(37, 53, 3, 7);

    FeaturePyramid ps = serial::extract_features(w, img);
    FeaturePyramid pp = extract_features(w, img);
    REQUIRE(bitwise_equal(ps.phi1, pp.phi1));
    REQUIRE(bitwise_equal(ps.phi2, pp.phi2));
    REQUIRE(bitwise_equal(ps.phi3, pp.phi3));

    for (bool irm : {true, false}) {
      EnhanceConfig cfg;
      cfg.irm_enabled = irm;
      ImageTensor es = serial::enhance_image(w, img, cfg);
      ImageTensor ep = enhance_image(w, img, cfg);
      REQUIRE(bitwise_equal(es, ep));
    }
  }
}

TEST_CASE("band splits at any thread count leave the pipeline unchanged") {
  int trial = 0;
  for (const char* ts : {"3-3", "3-1-3", "3-2-2-3"}) {
    Weights w = init_weights(parse_topology(ts), 21);
    for (int h : {1, 2, 3, 5, 11, 23}) {
      for (int wd : {1, 3, 17}) {
        ImageTensor img = oracle::random_image(h, wd, 3, 500 + trial);
        EnhanceConfig cfg;
        cfg.irm_enabled = (trial % 2 == 0);
        ImageTensor ref = serial::enhance_image(w, img, cfg);
        for (int threads : {2, 3, 5}) {
          ThreadGuard g(threads);
          REQUIRE(bitwise_equal(ref, enhance_image(w, img, cfg)));
        }
        ++trial;
      }
    }
  }
}

TEST_CASE("results do not depend on the thread count") {
  Weights w = init_weights(parse_topology("3-1-3"), 11);
  ImageTensor img = oracle::random_image(41, 29, 3, 13);
  EnhanceConfig cfg;

  ImageTensor one, four;
  {
    ThreadGuard g(1);
    one = enhance_image(w, img, cfg);
  }
  {
    ThreadGuard g(4);
    four = enhance_image(w, img, cfg);
  }
  REQUIRE(bitwise_equal(one, four));

  ImageTensor ref = serial::enhance_image(w, img, cfg);
  REQUIRE(bitwise_equal(ref, four));
}
