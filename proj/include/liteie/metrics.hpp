#pragma once

#include <utility>

#include "liteie/image.hpp"

namespace liteie {

struct MetricsReport {
  double psnr = 0;  // dB; +inf for identical images
  double ssim = 0;
  double mae = 0;   // on the 0..255 scale
  double mse = 0;   // on the 0..255 scale, squared
};

// 10*log10(1/MSE) with MSE on the [0,1] scale.
double psnr(const ImageTensor& a, const ImageTensor& b);

// Mean structural similarity: 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range 1.0, channels averaged. Requires min(h,w) >= 11.
double ssim(const ImageTensor& a, const ImageTensor& b);

// Mean absolute / squared error on the 0..255 scale.
std::pair<double, double> mae_mse(const ImageTensor& a, const ImageTensor& b);

MetricsReport compute_metrics(const ImageTensor& a, const ImageTensor& b);

}  // namespace liteie
