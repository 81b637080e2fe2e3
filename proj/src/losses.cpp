#include "liteie/losses.hpp"

#include <cmath>

#include "liteie/errors.hpp"
#include "liteie/mathutil.hpp"

namespace liteie {

namespace {

void channel_means(const ImageD& img, double out[3]) {
  for (int c = 0; c < 3; ++c) {
    CompensatedSum s;
    const double* plane = img.plane_ptr(c);
    for (std::size_t i = 0; i < img.plane(); ++i) s.add(plane[i]);
    out[c] = s.value() / static_cast<double>(img.plane());
  }
}

}  // namespace

double chroma_factor(double r0, double g0, double b0) {
  if (r0 < 0 || g0 < 0 || b0 < 0 || std::abs(r0 + g0 + b0 - 1.0) > 1e-6)
    throw InvalidArgument("chroma_factor: ratios must be nonnegative and sum to 1");
  double d = (r0 - 1.0 / 3.0) * (r0 - 1.0 / 3.0) +
             (g0 - 1.0 / 3.0) * (g0 - 1.0 / 3.0) +
             (b0 - 1.0 / 3.0) * (b0 - 1.0 / 3.0);
  return 1.0 - std::sqrt(d);
}

double exposure_loss(const ImageD& enhanced, const ImageD& original,
                     const LossConfig& cfg) {
  if (!enhanced.same_shape(original)) throw ShapeError("exposure_loss: shape mismatch");
  if (enhanced.channels != 3) throw ShapeError("exposure_loss: expects 3 channels");

  double orig[3];
  channel_means(original, orig);
  double total = orig[0] + orig[1] + orig[2];
  if (total <= 0.0)
    throw DegenerateInput("exposure_loss: original image is all zero");
  double r0 = orig[0] / total, g0 = orig[1] / total, b0 = orig[2] / total;
  double c0 = chroma_factor(r0, g0, b0);

  double enh[3];
  channel_means(enhanced, enh);
  double ratios[3] = {r0, g0, b0};
  double loss = 0;
  for (int c = 0; c < 3; ++c) {
    double d = enh[c] - cfg.exp_alpha * ratios[c] * c0;
    loss += d * d;
  }
  return loss;
}

double ea_tv_loss(const ImageD& map, const LossConfig& cfg) {
  if (map.height < 1 || map.width < 1 || map.channels < 1)
    throw InvalidArgument("ea_tv_loss: empty map");
  const int h = map.height, w = map.width;
  CompensatedSum s;
  for (int c = 0; c < map.channels; ++c) {
    const double* plane = map.plane_ptr(c);
    // Vertical neighbor differences; a 1xN map simply contributes nothing.
    for (int y = 0; y + 1 < h; ++y)
      for (int x = 0; x < w; ++x) {
        double d = plane[static_cast<std::size_t>(y + 1) * w + x] -
                   plane[static_cast<std::size_t>(y) * w + x];
        s.add(std::exp(-cfg.tv_beta * std::abs(d)) * d * d);
      }
    for (int y = 0; y < h; ++y)
      for (int x = 0; x + 1 < w; ++x) {
        double d = plane[static_cast<std::size_t>(y) * w + x + 1] -
                   plane[static_cast<std::size_t>(y) * w + x];
        s.add(std::exp(-cfg.tv_beta * std::abs(d)) * d * d);
      }
  }
  return s.value() / static_cast<double>(map.size());
}

double mscol_loss(const ImageD& enhanced, const ImageD& original,
                  const LossConfig& cfg) {
  if (!enhanced.same_shape(original)) throw ShapeError("mscol_loss: shape mismatch");
  if (enhanced.channels != 3) throw ShapeError("mscol_loss: expects 3 channels");
  if (cfg.local_window < 1) throw InvalidArgument("mscol_loss: window must be >= 1");

  const int h = enhanced.height, w = enhanced.width, win = cfg.local_window;

  // Local term: cell color means; ragged edges form smaller cells.
  CompensatedSum cell_sum;
  long cells = 0;
  for (int cy = 0; cy < h; cy += win) {
    int y1 = std::min(cy + win, h);
    for (int cx = 0; cx < w; cx += win) {
      int x1 = std::min(cx + win, w);
      double npix = static_cast<double>(y1 - cy) * (x1 - cx);
      double sq = 0;
      for (int c = 0; c < 3; ++c) {
        const double* pe = enhanced.plane_ptr(c);
        const double* po = original.plane_ptr(c);
        double se = 0, so = 0;
        for (int y = cy; y < y1; ++y)
          for (int x = cx; x < x1; ++x) {
            se += pe[static_cast<std::size_t>(y) * w + x];
            so += po[static_cast<std::size_t>(y) * w + x];
          }
        double d = se / npix - so / npix;
        sq += d * d;
      }
      cell_sum.add(sq);
      ++cells;
    }
  }
  double local = cfg.lambda_local * cell_sum.value() / static_cast<double>(cells);

  // Global term: pull each channel mean toward the gray-world average of the
  // enhanced image's own channel means.
  double enh[3];
  channel_means(enhanced, enh);
  double ref = (enh[0] + enh[1] + enh[2]) / 3.0;
  double global = 0;
  for (int c = 0; c < 3; ++c) {
    double d = enh[c] - ref;
    global += d * d;
  }
  global *= cfg.lambda_global;

  return local + global;
}

LossBreakdown total_loss(const ImageD& enhanced, const ImageD& original,
                         const ImageD& phi3, const LossConfig& cfg) {
  LossBreakdown out;
  out.exposure = exposure_loss(enhanced, original, cfg);
  out.tv = ea_tv_loss(phi3, cfg);
  out.mscol = mscol_loss(enhanced, original, cfg);
  out.total = out.exposure + out.tv + out.mscol;
  return out;
}

}  // namespace liteie
