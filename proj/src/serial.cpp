#include "liteie/serial.hpp"

#include <vector>

#include "conv_rows.hpp"
#include "liteie/errors.hpp"
#include "liteie/mathutil.hpp"

namespace liteie::serial {

namespace {

// Mirrors the OpenMP drivers minus the pragmas. The row kernel itself is
// shared (conv_rows.hpp), so the only thing this reference checks is that
// the parallel decomposition does not change results.
template <typename Act>
ImageTensor conv3x3_act(const ImageTensor& in, const std::vector<float>& kernel,
                        const std::vector<float>& bias, Act act) {
  const int in_ch = in.channels;
  const int out_ch = static_cast<int>(bias.size());
  if (out_ch < 1 ||
      kernel.size() != static_cast<std::size_t>(out_ch) * in_ch * 9)
    throw ShapeError("conv3x3_same: kernel/bias size does not match channels");

  const int h = in.height, w = in.width;
  ImageTensor out(h, w, out_ch);
  for (int y = 0; y < h; ++y)
    for (int co = 0; co < out_ch; ++co)
      detail::conv3x3_row(in, kernel, bias, co, y, act,
                          out.plane_ptr(co) + static_cast<std::size_t>(y) * w);
  return out;
}

template <typename Act>
ImageTensor apply_operator(const Weights& w, const ImageTensor& in, Act act) {
  const std::size_t last = w.blocks.size() - 1;
  if (last == 0)
    return conv3x3_act(in, w.blocks[0].kernel, w.blocks[0].bias, act);
  ImageTensor cur =
      conv3x3_act(in, w.blocks[0].kernel, w.blocks[0].bias, detail::ActNone{});
  for (std::size_t b = 1; b < last; ++b)
    cur = conv3x3_act(cur, w.blocks[b].kernel, w.blocks[b].bias, detail::ActNone{});
  return conv3x3_act(cur, w.blocks[last].kernel, w.blocks[last].bias, act);
}

}  // namespace

ImageTensor conv3x3_same(const ImageTensor& in, const std::vector<float>& kernel,
                         const std::vector<float>& bias) {
  return conv3x3_act(in, kernel, bias, detail::ActNone{});
}

FeaturePyramid extract_features(const Weights& w, const ImageTensor& img) {
  if (img.channels != 3) throw ShapeError("extract_features: input must have 3 channels");
  validate_topology(w.topology);

  FeaturePyramid pyr;
  pyr.phi1 = apply_operator(w, img, detail::ActRelu{});
  pyr.phi2 = apply_operator(w, pyr.phi1, detail::ActRelu{});
  pyr.phi3 = apply_operator(w, pyr.phi2, detail::ActTanh{});
  return pyr;
}

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

  // The OpenMP pipeline splits the image into one band per thread; the
  // reference runs the same engine as a single band.
  ImageTensor out(img.height, img.width, 3);
  detail::run_fused_band(w, img, cfg, 0, img.height, out);
  return out;
}

}  // namespace liteie::serial
