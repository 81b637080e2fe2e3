#include "liteie/enhance.hpp"

#include <omp.h>

#include <vector>

#include "conv_rows.hpp"
#include "liteie/errors.hpp"
#include "liteie/mathutil.hpp"

namespace liteie {

template <typename T>
Image<T> enhance_step(const Image<T>& I, const Image<T>& phi3) {
  if (!I.same_shape(phi3)) throw ShapeError("enhance_step: shape mismatch");
  Image<T> out(I.height, I.width, I.channels);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(I.size()); ++i) {
    T v = I.data[i];
    out.data[i] = v + phi3.data[i] * (v * v - v);
  }
  return out;
}

template Image<float> enhance_step(const Image<float>&, const Image<float>&);
template Image<double> enhance_step(const Image<double>&, const Image<double>&);

template <typename T>
Image<T> restore_step(const Image<T>& I_tilde, const BasicFeaturePyramid<T>& pyr,
                      const Image<T>& I_init, const EnhanceConfig& cfg) {
  if (!I_tilde.same_shape(I_init) || !I_tilde.same_shape(pyr.phi1) ||
      !I_tilde.same_shape(pyr.phi2) || !I_tilde.same_shape(pyr.phi3))
    throw ShapeError("restore_step: shape mismatch");
  const T a1 = static_cast<T>(cfg.alpha1);
  const T a2 = static_cast<T>(cfg.alpha2);
  const T a3 = static_cast<T>(cfg.alpha3);
  Image<T> out(I_tilde.height, I_tilde.width, I_tilde.channels);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(I_tilde.size()); ++i) {
    T g = tanh_mix3(a1, pyr.phi1.data[i], a2, pyr.phi2.data[i], a3,
                    pyr.phi3.data[i]) *
          I_init.data[i];
    T it = I_tilde.data[i];
    T y = it + (it * it - it) * g;
    out.data[i] = cfg.clamp_output ? clamp01(y) : y;
  }
  return out;
}

template Image<float> restore_step(const Image<float>&,
                                   const BasicFeaturePyramid<float>&,
                                   const Image<float>&, const EnhanceConfig&);
template Image<double> restore_step(const Image<double>&,
                                    const BasicFeaturePyramid<double>&,
                                    const Image<double>&, const EnhanceConfig&);

ImageTensor enhance_image(const Weights& w, const ImageTensor& img,
                          const EnhanceConfig& cfg) {
  if (img.channels != 3) throw ShapeError("enhance_image: input must have 3 channels");
  if (cfg.iterations < 0) throw InvalidArgument("enhance_image: iterations must be >= 0");
  if (cfg.iterations == 0) return img;

  validate_topology(w.topology);
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    const std::size_t cin = w.topology.channel_widths[b];
    const std::size_t cout = w.topology.channel_widths[b + 1];
    if (w.blocks[b].bias.size() != cout ||
        w.blocks[b].kernel.size() != cout * cin * 9)
      throw ShapeError("conv3x3_same: kernel/bias size does not match channels");
  }

  const int h = img.height;
  ImageTensor out(h, img.width, 3);
  // Independent row bands, one per thread; each band recomputes its own
  // warmup rows, so the split cannot change any value.
#pragma omp parallel
  {
    const long nt = omp_get_num_threads();
    const long tid = omp_get_thread_num();
    const int y0 = static_cast<int>(h * tid / nt);
    const int y1 = static_cast<int>(h * (tid + 1) / nt);
    if (y1 > y0) detail::run_fused_band(w, img, cfg, y0, y1, out);
  }
  return out;
}

}  // namespace liteie
