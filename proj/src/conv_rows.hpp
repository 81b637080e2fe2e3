#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "liteie/enhance.hpp"
#include "liteie/image.hpp"
#include "liteie/mathutil.hpp"
#include "liteie/net.hpp"

// Row-level building blocks shared by the parallel and serial pipelines.
// Keeping a single copy of the accumulation order is what guarantees that
// every driver — OpenMP, serial, full-image convolution, and the fused
// enhancement engine — produces bit-identical values.

namespace liteie::detail {

struct ActNone {
  template <typename T>
  T operator()(T v) const { return v; }
};
struct ActRelu {
  template <typename T>
  T operator()(T v) const { return v < T(0) ? T(0) : v; }
};
struct ActTanh {
  template <typename T>
  T operator()(T v) const { return act_tanh(v); }
};

// One output row (channel co) of the zero-padded 3x3 convolution, reading
// the three input rows above/at/below the output row. b0/b2 are null where
// the padding region begins (first/last image row); channel ci of a row
// sits at base + ci * ch_stride. The activation is applied in the store.
//
// The per-tap bounds checks defeat vectorization, so only border pixels
// take the guarded path. Interior pixels accumulate into dst one input
// channel at a time with the taps unrolled — the same additions in the
// same order, just in a branch-free loop.
template <typename T, typename Act>
inline void conv3x3_row_span(const T* b0, const T* b1, const T* b2,
                             std::size_t ch_stride, int in_ch, int w,
                             const std::vector<T>& kernel,
                             const std::vector<T>& bias, int co, Act act,
                             T* dst) {
  auto guarded = [&](int x) {
    T acc = bias[co];
    for (int ci = 0; ci < in_ch; ++ci) {
      const T* k = kernel.data() + (static_cast<std::size_t>(co) * in_ch + ci) * 9;
      const T* rows[3] = {b0 ? b0 + ci * ch_stride : nullptr,
                          b1 + ci * ch_stride,
                          b2 ? b2 + ci * ch_stride : nullptr};
      for (int ky = 0; ky < 3; ++ky) {
        const T* row = rows[ky];
        if (!row) continue;
        for (int kx = 0; kx < 3; ++kx) {
          int sx = x + kx - 1;
          if (sx < 0 || sx >= w) continue;
          acc += k[ky * 3 + kx] * row[sx];
        }
      }
    }
    return acc;
  };

  if (!b0 || !b2 || w < 3) {
    for (int x = 0; x < w; ++x) dst[x] = act(guarded(x));
    return;
  }
  dst[0] = act(guarded(0));
  dst[w - 1] = act(guarded(w - 1));
  for (int ci = 0; ci < in_ch; ++ci) {
    const bool first = (ci == 0);
    const bool last = (ci == in_ch - 1);
    const T bias0 = bias[co];
    const T* k = kernel.data() + (static_cast<std::size_t>(co) * in_ch + ci) * 9;
    const T* r0 = b0 + ci * ch_stride;
    const T* r1 = b1 + ci * ch_stride;
    const T* r2 = b2 + ci * ch_stride;
    const T k0 = k[0], k1 = k[1], k2 = k[2];
    const T k3 = k[3], k4 = k[4], k5 = k[5];
    const T k6 = k[6], k7 = k[7], k8 = k[8];
    for (int x = 1; x < w - 1; ++x) {
      T acc = first ? bias0 : dst[x];
      acc += k0 * r0[x - 1];
      acc += k1 * r0[x];
      acc += k2 * r0[x + 1];
      acc += k3 * r1[x - 1];
      acc += k4 * r1[x];
      acc += k5 * r1[x + 1];
      acc += k6 * r2[x - 1];
      acc += k7 * r2[x];
      acc += k8 * r2[x + 1];
      dst[x] = last ? act(acc) : acc;
    }
  }
}

// Row y of the full-image convolution: the planar image is just a span with
// channel stride height*width.
template <typename T, typename Act>
inline void conv3x3_row(const Image<T>& in, const std::vector<T>& kernel,
                        const std::vector<T>& bias, int co, int y, Act act,
                        T* dst) {
  const int h = in.height, w = in.width;
  const T* base = in.data.data();
  const T* b0 = y > 0 ? base + static_cast<std::size_t>(y - 1) * w : nullptr;
  const T* b1 = base + static_cast<std::size_t>(y) * w;
  const T* b2 = y + 1 < h ? base + static_cast<std::size_t>(y + 1) * w : nullptr;
  conv3x3_row_span(b0, b1, b2, in.plane(), in.channels, w, kernel, bias, co,
                   act, dst);
}

// ---------------------------------------------------------------------------
// Fused enhancement engine.
//
// The three operator applications unroll into 3*B conv layers (B blocks per
// stage, ReLU after stages one and two, tanh after the third). Layer l only
// ever reads three adjacent rows of layer l-1, so the whole pipeline rolls
// through the image row by row with a small ring of rows per layer: no
// intermediate map is materialized at image size, and the working set is
// O(width) at any resolution. The two stage outputs the restoration factor
// needs again at emission time keep a deeper ring.
//
// Per element everything — tap order, activation placement, the iteration
// recurrence — goes through the shared row kernel and the exact expressions
// of the one-shot formulation, so results are bit-identical to evaluating
// the stages on full images.

struct FusedLayer {
  const std::vector<float>* kernel;
  const std::vector<float>* bias;
  int cin = 0, cout = 0;
  int act = 0;  // 0 none, 1 relu, 2 tanh
};

inline std::vector<FusedLayer> fused_layers(const Weights& w) {
  const int B = static_cast<int>(w.blocks.size());
  std::vector<FusedLayer> layers;
  layers.reserve(3 * B);
  for (int s = 0; s < 3; ++s)
    for (int b = 0; b < B; ++b) {
      FusedLayer ly;
      ly.kernel = &w.blocks[b].kernel;
      ly.bias = &w.blocks[b].bias;
      ly.cin = w.topology.channel_widths[b];
      ly.cout = w.topology.channel_widths[b + 1];
      ly.act = (b == B - 1) ? (s == 2 ? 2 : 1) : 0;
      layers.push_back(ly);
    }
  return layers;
}

struct RowRing {
  int cap = 0, ch = 0, w = 0;
  std::vector<float> buf;
  void init(int cap_, int ch_, int w_) {
    cap = cap_;
    ch = ch_;
    w = w_;
    buf.assign(static_cast<std::size_t>(cap) * ch * w, 0.0f);
  }
  float* slot(int y) {
    return buf.data() + static_cast<std::size_t>(y % cap) * ch * w;
  }
};

// Runs the pipeline for output rows [y0, y1). Bands are independent: each
// one recomputes the warmup rows its dependency cone needs, so splitting
// the image across threads cannot change any value.
inline void run_fused_band(const Weights& w, const ImageTensor& img,
                           const EnhanceConfig& cfg, int y0, int y1,
                           ImageTensor& out) {
  const int B = static_cast<int>(w.blocks.size());
  const int L = 3 * B;
  const int h = img.height, wd = img.width;
  const std::vector<FusedLayer> layers = fused_layers(w);
  const int iphi1 = B - 1, iphi2 = 2 * B - 1;

  std::vector<RowRing> rings(L);
  for (int l = 0; l < L; ++l) {
    int cap = 3;
    // Stage outputs are consumed again when their emission row retires,
    // L-1-l wavefronts after production.
    if (l == iphi1) cap = std::max(cap, L - B + 1);
    if (l == iphi2) cap = std::max(cap, B + 1);
    rings[l].init(cap, layers[l].cout, wd);
  }

  const int T = cfg.iterations;
  const bool irm = cfg.irm_enabled;
  const bool clamp = cfg.clamp_output;
  const float a1 = static_cast<float>(cfg.alpha1);
  const float a2 = static_cast<float>(cfg.alpha2);
  const float a3 = static_cast<float>(cfg.alpha3);
  std::vector<float> gb(irm ? wd : 0), xb(wd);

  // Wavefront r: layer l produces its row r + (L-1-l); the finished row r
  // retires at the end. The warmup wavefronts fill the rings for the first
  // emitted row's dependency cone.
  for (int r = y0 - 2 * (L - 1); r < y1; ++r) {
    for (int l = 0; l < L; ++l) {
      const int p = r + (L - 1 - l);
      if (p < 0 || p >= h) continue;
      const FusedLayer& ly = layers[l];
      const float *b0, *b1, *b2;
      std::size_t stride;
      if (l == 0) {
        const float* base = img.data.data();
        b0 = p > 0 ? base + static_cast<std::size_t>(p - 1) * wd : nullptr;
        b1 = base + static_cast<std::size_t>(p) * wd;
        b2 = p + 1 < h ? base + static_cast<std::size_t>(p + 1) * wd : nullptr;
        stride = img.plane();
      } else {
        RowRing& rin = rings[l - 1];
        b0 = p > 0 ? rin.slot(p - 1) : nullptr;
        b1 = rin.slot(p);
        b2 = p + 1 < h ? rin.slot(p + 1) : nullptr;
        stride = static_cast<std::size_t>(wd);
      }
      float* dslot = rings[l].slot(p);
      for (int co = 0; co < ly.cout; ++co) {
        float* dst = dslot + static_cast<std::size_t>(co) * wd;
        switch (ly.act) {
          case 1:
            conv3x3_row_span(b0, b1, b2, stride, ly.cin, wd, *ly.kernel,
                             *ly.bias, co, ActRelu{}, dst);
            break;
          case 2:
            conv3x3_row_span(b0, b1, b2, stride, ly.cin, wd, *ly.kernel,
                             *ly.bias, co, ActTanh{}, dst);
            break;
          default:
            conv3x3_row_span(b0, b1, b2, stride, ly.cin, wd, *ly.kernel,
                             *ly.bias, co, ActNone{}, dst);
        }
      }
    }
    if (r < y0) continue;

    // Retire row r: all T iteration steps in small row buffers, with the
    // restoration factor (tanh-bounds the pyramid once, constant across
    // iterations, folded with the initial image) alongside.
    const float* ph_b = rings[L - 1].slot(r);
    const float* p1_b = rings[iphi1].slot(r);
    const float* p2_b = rings[iphi2].slot(r);
    for (int co = 0; co < 3; ++co) {
      const float* ph = ph_b + static_cast<std::size_t>(co) * wd;
      const float* srow = img.plane_ptr(co) + static_cast<std::size_t>(r) * wd;
      float* drow = out.plane_ptr(co) + static_cast<std::size_t>(r) * wd;
      if (irm) {
        const float* p1 = p1_b + static_cast<std::size_t>(co) * wd;
        const float* p2 = p2_b + static_cast<std::size_t>(co) * wd;
        for (int i = 0; i < wd; ++i)
          gb[i] = tanh_mix3(a1, p1[i], a2, p2[i], a3, ph[i]) * srow[i];
        for (int i = 0; i < wd; ++i) xb[i] = srow[i];
        for (int t = 0; t < T; ++t) {
          for (int i = 0; i < wd; ++i) {
            float v = xb[i];
            float it = v + ph[i] * (v * v - v);
            float yv = it + (it * it - it) * gb[i];
            xb[i] = clamp ? clamp01(yv) : yv;
          }
        }
      } else {
        for (int i = 0; i < wd; ++i) xb[i] = srow[i];
        for (int t = 0; t < T; ++t) {
          for (int i = 0; i < wd; ++i) {
            float v = xb[i];
            xb[i] = v + ph[i] * (v * v - v);
          }
        }
      }
      for (int i = 0; i < wd; ++i) drow[i] = xb[i];
    }
  }
}

}  // namespace liteie::detail
