#include "liteie/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "liteie/errors.hpp"
#include "liteie/grad.hpp"
#include "liteie/image_io.hpp"

namespace liteie {

void adam_step(std::vector<double>& params, const std::vector<double>& grad,
               AdamState& state, const TrainConfig& cfg) {
  if (params.size() != grad.size())
    throw InvalidArgument("adam_step: parameter/gradient size mismatch");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size())
    throw InvalidArgument("adam_step: state size mismatch");

  state.t += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grad[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grad[i] * grad[i];
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
  }
}

namespace {

struct CachedImage {
  int h = 0, w = 0;
  std::vector<unsigned char> planes;  // 3 planes, 8-bit
};

std::vector<std::string> list_images(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DatasetError("not a directory: " + dir);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png" || ext == ".ppm") names.push_back(e.path().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

CachedImage cache_image(const ImageTensor& img) {
  CachedImage c;
  c.h = img.height;
  c.w = img.width;
  c.planes.resize(img.size());
  // Sources are 8-bit, so v*255 rounds back to the original byte exactly.
  for (std::size_t i = 0; i < img.size(); ++i)
    c.planes[i] = static_cast<unsigned char>(std::lround(img.data[i] * 255.0f));
  return c;
}

ImageD crop_to_double(const CachedImage& src, int oy, int ox, int size) {
  ImageD out(size, size, 3);
  const std::size_t plane = static_cast<std::size_t>(src.h) * src.w;
  for (int c = 0; c < 3; ++c) {
    const unsigned char* sp = src.planes.data() + c * plane;
    double* dp = out.plane_ptr(c);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        dp[static_cast<std::size_t>(y) * size + x] =
            sp[static_cast<std::size_t>(oy + y) * src.w + ox + x] / 255.0;
  }
  return out;
}

bool all_zero(const ImageD& img) {
  for (double v : img.data)
    if (v != 0.0) return false;
  return true;
}

}  // namespace

TrainResult train(const std::string& dataset_dir, const NetTopology& topo,
                  const TrainConfig& cfg, std::ostream* log_stream) {
  validate_topology(topo);
  if (cfg.steps < 0) throw InvalidArgument("train: steps must be >= 0");
  if (cfg.batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (cfg.patch < 3) throw InvalidArgument("train: patch must be >= 3");

  std::vector<std::string> names = list_images(dataset_dir);
  if (names.empty())
    throw DatasetError("no images (.png/.ppm) in " + dataset_dir);
  std::vector<CachedImage> images;
  for (const auto& name : names) {
    CachedImage c = cache_image(load_image(name));
    if (c.h >= cfg.patch && c.w >= cfg.patch) images.push_back(std::move(c));
  }
  if (images.empty())
    throw DatasetError("no image in " + dataset_dir + " is at least " +
                       std::to_string(cfg.patch) + "px on both sides");

  std::vector<double> params = flatten(widen(init_weights(topo, cfg.seed)));
  AdamState state;
  TrainResult result;

  // Separate sampling stream so crop draws do not depend on how many values
  // weight initialization consumed.
  std::mt19937_64 sampler(cfg.seed + 0x9E3779B97F4A7C15ULL);

  for (int step = 1; step <= cfg.steps; ++step) {
    std::vector<ImageD> batch;
    batch.reserve(cfg.batch_size);
    for (int b = 0; b < cfg.batch_size; ++b) {
      ImageD patch;
      int attempts = 0;
      for (;;) {
        const CachedImage& src = images[sampler() % images.size()];
        int oy = static_cast<int>(sampler() %
                                  static_cast<std::uint64_t>(src.h - cfg.patch + 1));
        int ox = static_cast<int>(sampler() %
                                  static_cast<std::uint64_t>(src.w - cfg.patch + 1));
        patch = crop_to_double(src, oy, ox, cfg.patch);
        // Channel ratios are undefined on an all-black crop; redraw.
        if (!all_zero(patch)) break;
        if (++attempts >= 1000)
          throw DatasetError("train: could not sample a non-black crop");
      }
      batch.push_back(std::move(patch));
    }

    WeightsD w = unflatten(topo, params);
    std::vector<double> grad;
    BatchLoss loss = backward_gradients(w, batch, cfg.enhance, cfg.loss, grad);
    if (!std::isfinite(loss.total))
      throw DivergenceError("train: non-finite loss at step " +
                            std::to_string(step));

    adam_step(params, grad, state, cfg);
    for (double p : params)
      if (!std::isfinite(p))
        throw DivergenceError("train: non-finite parameter at step " +
                              std::to_string(step));

    char line[160];
    std::snprintf(line, sizeof(line), "%d, %.10g, %.10g, %.10g, %.10g", step,
                  loss.total, loss.exposure, loss.tv, loss.mscol);
    result.log_lines.emplace_back(line);
    if (log_stream) (*log_stream) << line << '\n';

    if (cfg.checkpoint_every > 0 && !cfg.checkpoint_prefix.empty() &&
        step % cfg.checkpoint_every == 0)
      serialize_weights(narrow(unflatten(topo, params)),
                        cfg.checkpoint_prefix + ".step" + std::to_string(step));
  }

  result.weights = narrow(unflatten(topo, params));
  return result;
}

}  // namespace liteie
