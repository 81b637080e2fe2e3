#include "liteie/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "liteie/errors.hpp"
#include "liteie/mathutil.hpp"

namespace liteie {

double psnr(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("psnr: shape mismatch");
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    s.add(d * d);
  }
  double mse = s.value() / static_cast<double>(a.size());
  if (mse <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kWin = 11;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWin);
  const double sigma = 1.5;
  double sum = 0;
  for (int i = 0; i < kWin; ++i) {
    double d = i - (kWin - 1) / 2.0;
    w[i] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += w[i];
  }
  for (auto& v : w) v /= sum;
  return w;
}

// Separable valid-region Gaussian filter: (h,w) -> (h-10, w-10).
std::vector<double> blur_valid(const std::vector<double>& src, int h, int w,
                               const std::vector<double>& win) {
  const int vw = w - kWin + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * vw);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0;
      for (int k = 0; k < kWin; ++k)
        acc += win[k] * src[static_cast<std::size_t>(y) * w + x + k];
      tmp[static_cast<std::size_t>(y) * vw + x] = acc;
    }
  const int vh = h - kWin + 1;
  std::vector<double> out(static_cast<std::size_t>(vh) * vw);
  for (int y = 0; y < vh; ++y)
    for (int x = 0; x < vw; ++x) {
      double acc = 0;
      for (int k = 0; k < kWin; ++k)
        acc += win[k] * tmp[static_cast<std::size_t>(y + k) * vw + x];
      out[static_cast<std::size_t>(y) * vw + x] = acc;
    }
  return out;
}

}  // namespace

double ssim(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("ssim: shape mismatch");
  if (a.height < kWin || a.width < kWin)
    throw InvalidArgument("ssim: image smaller than the 11x11 window");

  const double c1 = 0.01 * 0.01;  // (K1*L)^2 with L = 1
  const double c2 = 0.03 * 0.03;
  const int h = a.height, w = a.width;
  const std::vector<double> win = gaussian_window();

  double channel_acc = 0;
  for (int c = 0; c < a.channels; ++c) {
    const float* pa = a.plane_ptr(c);
    const float* pb = b.plane_ptr(c);
    std::size_t n = a.plane();
    std::vector<double> xa(n), xb(n), xaa(n), xbb(n), xab(n);
    for (std::size_t i = 0; i < n; ++i) {
      double va = pa[i], vb = pb[i];
      xa[i] = va;
      xb[i] = vb;
      xaa[i] = va * va;
      xbb[i] = vb * vb;
      xab[i] = va * vb;
    }
    std::vector<double> mu_a = blur_valid(xa, h, w, win);
    std::vector<double> mu_b = blur_valid(xb, h, w, win);
    std::vector<double> m_aa = blur_valid(xaa, h, w, win);
    std::vector<double> m_bb = blur_valid(xbb, h, w, win);
    std::vector<double> m_ab = blur_valid(xab, h, w, win);

    CompensatedSum s;
    for (std::size_t i = 0; i < mu_a.size(); ++i) {
      double ma = mu_a[i], mb = mu_b[i];
      double va = m_aa[i] - ma * ma;
      double vb = m_bb[i] - mb * mb;
      double cov = m_ab[i] - ma * mb;
      double num = (2 * ma * mb + c1) * (2 * cov + c2);
      double den = (ma * ma + mb * mb + c1) * (va + vb + c2);
      s.add(num / den);
    }
    channel_acc += s.value() / static_cast<double>(mu_a.size());
  }
  return channel_acc / a.channels;
}

std::pair<double, double> mae_mse(const ImageTensor& a, const ImageTensor& b) {
  if (!a.same_shape(b)) throw ShapeError("mae_mse: shape mismatch");
  CompensatedSum abs_sum, sq_sum;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = 255.0 * static_cast<double>(a.data[i]) -
               255.0 * static_cast<double>(b.data[i]);
    abs_sum.add(std::abs(d));
    sq_sum.add(d * d);
  }
  double n = static_cast<double>(a.size());
  return {abs_sum.value() / n, sq_sum.value() / n};
}

MetricsReport compute_metrics(const ImageTensor& a, const ImageTensor& b) {
  MetricsReport r;
  r.psnr = psnr(a, b);
  r.ssim = ssim(a, b);
  auto [mae, mse] = mae_mse(a, b);
  r.mae = mae;
  r.mse = mse;
  return r;
}

}  // namespace liteie
