#pragma once

#include "liteie/image.hpp"

namespace liteie {

struct LossConfig {
  double exp_alpha = 0.8;     // exposure target scale
  double tv_beta = 0.4;       // edge sensitivity of the smoothness weights
  double lambda_local = 1.0;  // cell-mean color term
  double lambda_global = 1.0; // gray-world color term
  int local_window = 16;      // cell size in pixels
};

// C0 = 1 - sqrt(sum_c (c0 - 1/3)^2) for channel ratios summing to 1.
// Range [1 - sqrt(6)/3, 1]; 1 means a perfectly balanced color distribution.
double chroma_factor(double r0, double g0, double b0);

// Pushes the enhanced image's global channel means toward alpha * c0 * C0,
// where c0 are the original's normalized channel ratios.
double exposure_loss(const ImageD& enhanced, const ImageD& original,
                     const LossConfig& cfg);

// Edge-aware smoothness: forward differences in both directions, each
// squared term weighted by exp(-beta * |diff|), mean over element count.
double ea_tv_loss(const ImageD& map, const LossConfig& cfg);

// Local term: mean over window cells of the squared difference between the
// enhanced and original cell color means. Global term: squared distance of
// the enhanced global channel means from their own gray-world average.
double mscol_loss(const ImageD& enhanced, const ImageD& original,
                  const LossConfig& cfg);

struct LossBreakdown {
  double total = 0;
  double exposure = 0;
  double tv = 0;
  double mscol = 0;
};

LossBreakdown total_loss(const ImageD& enhanced, const ImageD& original,
                         const ImageD& phi3, const LossConfig& cfg);

}  // namespace liteie
