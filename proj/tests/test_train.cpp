#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "liteie/errors.hpp"
#include "liteie/image_io.hpp"
#include "liteie/net.hpp"
#include "liteie/train.hpp"
#include "oracles.hpp"

using namespace liteie;

namespace {

// A small folder of dark synthetic photographs.
void make_dark_dataset(const oracle::TempDir& td, int count, int size = 96) {
  for (int i = 0; i < count; ++i) {
    ImageTensor img = oracle::random_image(size, size, 3, 5000 + i, 0.02f, 0.30f);
    // Smooth gradient on top so crops are not pure noise.
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        img.at(0, y, x) = std::min(1.0f, img.at(0, y, x) + 0.1f * y / size);
    save_image(img, td.file("img" + std::to_string(i) + ".png"));
  }
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.batch_size = 2;
  cfg.patch = 48;
  cfg.seed = 3;
  cfg.enhance.iterations = 4;
  return cfg;
}

std::vector<double> parse_line(const std::string& line) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(std::stod(field));
  return out;
}

bool same_weights(const Weights& a, const Weights& b) {
  if (a.topology.channel_widths != b.topology.channel_widths) return false;
  for (std::size_t i = 0; i < a.blocks.size(); ++i)
    if (a.blocks[i].kernel != b.blocks[i].kernel ||
        a.blocks[i].bias != b.blocks[i].bias)
      return false;
  return true;
}

}  // namespace

TEST_CASE("adam update rules") {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;

  std::vector<double> params = {0.5, -0.25, 0.0, 2.0};
  std::vector<double> zero(4, 0.0);
  AdamState st;
  std::vector<double> before = params;
  adam_step(params, zero, st, cfg);
  CHECK(params == before);
  CHECK(st.t == 1);

  // First step with any nonzero gradient moves each coordinate by about
  // -lr * sign(g); the epsilon in the denominator only nudges it.
  std::vector<double> p2 = {1.0, 1.0, 1.0};
  std::vector<double> g = {0.5, -0.002, 3.0};
  AdamState st2;
  adam_step(p2, g, st2, cfg);
  for (int i = 0; i < 3; ++i) {
    double delta = p2[i] - 1.0;
    double want = -cfg.learning_rate * (g[i] > 0 ? 1.0 : -1.0);
    CHECK(delta == doctest::Approx(want).epsilon(1e-4));
  }

  std::vector<double> wrong(2, 0.0);
  CHECK_THROWS_AS(adam_step(p2, wrong, st2, cfg), InvalidArgument);

  // Deterministic: replaying the same gradient sequence reproduces the
  // parameters bit for bit.
  std::vector<double> pa = {0.1, 0.2}, pb = {0.1, 0.2};
  AdamState sa, sb;
  for (int step = 0; step < 5; ++step) {
    std::vector<double> gg = {0.01 * (step + 1), -0.03};
    adam_step(pa, gg, sa, cfg);
    adam_step(pb, gg, sb, cfg);
  }
  CHECK(pa == pb);
}

TEST_CASE("train with zero steps returns the seeded initialization") {
  oracle::TempDir td("train-zero");
  make_dark_dataset(td, 2);
  TrainConfig cfg = quick_config();
  cfg.steps = 0;
  NetTopology t = parse_topology("3-1-3");
  TrainResult r = train(td.path.string(), t, cfg);
  CHECK(r.log_lines.empty());
  CHECK(same_weights(r.weights, init_weights(t, cfg.seed)));
}

TEST_CASE("training is bitwise deterministic") {
  oracle::TempDir td("train-det");
  make_dark_dataset(td, 3);
  TrainConfig cfg = quick_config();
  NetTopology t = parse_topology("3-1-3");

  TrainResult a = train(td.path.string(), t, cfg);
  TrainResult b = train(td.path.string(), t, cfg);
  CHECK(a.log_lines == b.log_lines);
  CHECK(same_weights(a.weights, b.weights));
  CHECK(a.log_lines.size() == 10);
}

TEST_CASE("training log format and stream mirroring") {
  oracle::TempDir td("train-log");
  make_dark_dataset(td, 2);
  TrainConfig cfg = quick_config();
  cfg.steps = 4;

  std::ostringstream stream;
  TrainResult r = train(td.path.string(), parse_topology("3-1-3"), cfg, &stream);
  REQUIRE(r.log_lines.size() == 4);
  for (std::size_t i = 0; i < r.log_lines.size(); ++i) {
    std::vector<double> f = parse_line(r.log_lines[i]);
    REQUIRE(f.size() == 5);  // step, total, exposure, tv, mscol
    CHECK(f[0] == static_cast<double>(i + 1));
    CHECK(f[1] == doctest::Approx(f[2] + f[3] + f[4]).epsilon(1e-8));
    for (double v : f) CHECK(std::isfinite(v));
  }

  std::string joined;
  for (const auto& l : r.log_lines) joined += l + "\n";
  CHECK(stream.str() == joined);
}

TEST_CASE("the objective decreases over a short synthetic run") {
  oracle::TempDir td("train-descent");
  make_dark_dataset(td, 4);
  TrainConfig cfg = quick_config();
  cfg.steps = 80;
  NetTopology t = parse_topology("3-1-3");
  TrainResult r = train(td.path.string(), t, cfg);

  auto window_mean = [&](std::size_t lo, std::size_t hi) {
    double s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += parse_line(r.log_lines[i])[1];
    return s / static_cast<double>(hi - lo);
  };
  double head = window_mean(0, 25);
  double tail = window_mean(55, 80);
  CHECK(tail < head);
}

TEST_CASE("checkpoints are written and loadable") {
  oracle::TempDir td("train-ckpt");
  make_dark_dataset(td, 2);
  TrainConfig cfg = quick_config();
  cfg.steps = 4;
  cfg.checkpoint_every = 2;
  cfg.checkpoint_prefix = td.file("ck");

  TrainResult r = train(td.path.string(), parse_topology("3-1-3"), cfg);
  for (int step : {2, 4}) {
    std::string path = td.file("ck") + ".step" + std::to_string(step);
    REQUIRE(std::filesystem::exists(path));
    Weights w = deserialize_weights(path);
    CHECK(w.topology.channel_widths == std::vector<int>{3, 1, 3});
  }
  // The final checkpoint equals the returned weights.
  Weights last = deserialize_weights(td.file("ck") + ".step4");
  CHECK(same_weights(last, r.weights));
}

TEST_CASE("dataset error cases") {
  NetTopology t = parse_topology("3-1-3");
  TrainConfig cfg = quick_config();

  oracle::TempDir empty("train-empty");
  CHECK_THROWS_AS(train(empty.path.string(), t, cfg), DatasetError);

  CHECK_THROWS_AS(train("/no/such/dataset/dir", t, cfg), DatasetError);

  // Images exist but are all smaller than the crop size.
  oracle::TempDir tiny("train-tiny");
  save_image(oracle::random_image(20, 20, 3, 1), tiny.file("small.png"));
  TrainConfig big = cfg;
  big.patch = 64;
  CHECK_THROWS_AS(train(tiny.path.string(), t, big), DatasetError);

  // Non-image files in the folder are ignored, not decoded.
  oracle::TempDir mixed("train-mixed");
  make_dark_dataset(mixed, 1);
  std::ofstream(mixed.file("notes.txt")) << "not an image";
  TrainConfig one = cfg;
  one.steps = 1;
  CHECK_NOTHROW(train(mixed.path.string(), t, one));
}

TEST_CASE("exploding updates abort with a divergence error") {
  // The objective saturates (tanh, clamp), so a merely huge finite rate
  // keeps the loss finite; an infinite rate makes every Adam update
  // non-finite on the first step.
  oracle::TempDir td("train-diverge");
  make_dark_dataset(td, 2);
  TrainConfig cfg = quick_config();
  cfg.steps = 10;
  cfg.learning_rate = std::numeric_limits<double>::infinity();
  try {
    train(td.path.string(), parse_topology("3-1-3"), cfg);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
}
