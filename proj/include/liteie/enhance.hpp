#pragma once

#include "liteie/image.hpp"
#include "liteie/net.hpp"

namespace liteie {

struct EnhanceConfig {
  int iterations = 8;
  // Mixing weights for the restoration residual. The restoration module is
  // parameter-free; these are fixed equal by default and configurable.
  double alpha1 = 1.0 / 3.0;
  double alpha2 = 1.0 / 3.0;
  double alpha3 = 1.0 / 3.0;
  bool clamp_output = true;
  bool irm_enabled = true;
};

// Quadratic curve adjustment: out = I + phi3 * (I^2 - I), elementwise.
// For I in [0,1] and phi3 in [-1,1] the result stays in [0,1].
template <typename T>
Image<T> enhance_step(const Image<T>& I, const Image<T>& phi3);

// Restoration: out = I_tilde + sum_i alpha_i * tanh(phi_i) * (I_tilde^2 -
// I_tilde) * I_init. Note tanh is applied to phi3 a second time here, as the
// update rule is written. Clamps to [0,1] when cfg.clamp_output.
template <typename T>
Image<T> restore_step(const Image<T>& I_tilde, const BasicFeaturePyramid<T>& pyr,
                      const Image<T>& I_init, const EnhanceConfig& cfg);

// Full pipeline: features are extracted ONCE from the original input, then T
// rounds of curve adjustment followed by restoration (when enabled), with
// I_init fixed to the original image throughout.
ImageTensor enhance_image(const Weights& w, const ImageTensor& img,
                          const EnhanceConfig& cfg);

}  // namespace liteie
