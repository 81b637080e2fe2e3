#include "liteie/grad.hpp"

#include <cmath>
#include <random>

#include "liteie/errors.hpp"
#include "liteie/mathutil.hpp"

namespace liteie {

namespace {

struct StageTrace {
  std::vector<ImageD> z;  // z[0] = stage input, z[b] = block b output
  ImageD phi;             // stage activation applied to z.back()
  ImageD tphi;            // tanh(phi), reused by the restoration residual
};

struct ForwardTrace {
  ImageD x0;
  StageTrace stage[3];
  ImageD g;                  // restoration map (empty when irm is off)
  std::vector<ImageD> x;     // x[0..T]
  std::vector<ImageD> itld;  // curve outputs, per iteration
  std::vector<ImageD> y;     // pre-clamp restoration outputs, per iteration
};

void run_stage(const WeightsD& w, const ImageD& in, int stage_index,
               StageTrace& st) {
  st.z.clear();
  st.z.push_back(in);
  for (std::size_t b = 0; b < w.blocks.size(); ++b)
    st.z.push_back(conv3x3_same(st.z.back(), w.blocks[b].kernel,
                                w.blocks[b].bias));
  const ImageD& a = st.z.back();
  st.phi = ImageD(a.height, a.width, a.channels);
  if (stage_index < 2) {
    for (std::size_t i = 0; i < a.size(); ++i)
      st.phi.data[i] = a.data[i] > 0 ? a.data[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < a.size(); ++i)
      st.phi.data[i] = std::tanh(a.data[i]);
  }
  st.tphi = ImageD(a.height, a.width, a.channels);
  for (std::size_t i = 0; i < a.size(); ++i)
    st.tphi.data[i] = std::tanh(st.phi.data[i]);
}

ForwardTrace forward_trace(const WeightsD& w, const ImageD& img,
                           const EnhanceConfig& ecfg, const GradOptions& opts) {
  if (img.channels != 3)
    throw ShapeError("forward_trace: input must have 3 channels");
  if (ecfg.iterations < 0)
    throw InvalidArgument("forward_trace: iterations must be >= 0");

  const WeightsD* w23 = opts.frozen_stage23 ? opts.frozen_stage23 : &w;
  ForwardTrace tr;
  tr.x0 = img;
  run_stage(w, img, 0, tr.stage[0]);
  run_stage(*w23, tr.stage[0].phi, 1, tr.stage[1]);
  run_stage(*w23, tr.stage[1].phi, 2, tr.stage[2]);

  const long n = static_cast<long>(img.size());
  if (ecfg.irm_enabled) {
    tr.g = ImageD(img.height, img.width, 3);
    for (long i = 0; i < n; ++i)
      tr.g.data[i] = (ecfg.alpha1 * tr.stage[0].tphi.data[i] +
                      ecfg.alpha2 * tr.stage[1].tphi.data[i] +
                      ecfg.alpha3 * tr.stage[2].tphi.data[i]) *
                     img.data[i];
  }

  const ImageD& phi3 = tr.stage[2].phi;
  tr.x.push_back(img);
  for (int t = 0; t < ecfg.iterations; ++t) {
    const ImageD& xt = tr.x.back();
    ImageD it(img.height, img.width, 3);
    for (long i = 0; i < n; ++i) {
      double v = xt.data[i];
      it.data[i] = v + phi3.data[i] * (v * v - v);
    }
    if (ecfg.irm_enabled) {
      ImageD y(img.height, img.width, 3);
      for (long i = 0; i < n; ++i) {
        double iv = it.data[i];
        y.data[i] = iv + (iv * iv - iv) * tr.g.data[i];
      }
      ImageD next(img.height, img.width, 3);
      if (ecfg.clamp_output) {
        for (long i = 0; i < n; ++i) next.data[i] = clamp01(y.data[i]);
      } else {
        next = y;
      }
      tr.itld.push_back(std::move(it));
      tr.y.push_back(std::move(y));
      tr.x.push_back(std::move(next));
    } else {
      tr.x.push_back(it);
      tr.itld.push_back(std::move(it));
    }
  }
  return tr;
}

LossBreakdown masked_loss(const ImageD& enhanced, const ImageD& original,
                          const ImageD& phi3, const LossConfig& lcfg,
                          const LossTermMask& mask) {
  LossBreakdown out;
  if (mask.exposure) out.exposure = exposure_loss(enhanced, original, lcfg);
  if (mask.tv) out.tv = ea_tv_loss(phi3, lcfg);
  if (mask.mscol) out.mscol = mscol_loss(enhanced, original, lcfg);
  out.total = out.exposure + out.tv + out.mscol;
  return out;
}

void channel_means(const ImageD& img, double out[3]) {
  for (int c = 0; c < 3; ++c) {
    CompensatedSum s;
    const double* plane = img.plane_ptr(c);
    for (std::size_t i = 0; i < img.plane(); ++i) s.add(plane[i]);
    out[c] = s.value() / static_cast<double>(img.plane());
  }
}

// d(loss terms)/d(enhanced) and the TV part of d(loss)/d(phi3).
void loss_backward(const ImageD& enhanced, const ImageD& original,
                   const ImageD& phi3, const LossConfig& lcfg,
                   const LossTermMask& mask, ImageD& d_enh, ImageD& d_phi3) {
  const int h = enhanced.height, w = enhanced.width;
  const double plane_n = static_cast<double>(enhanced.plane());
  d_enh = ImageD(h, w, 3);

  if (mask.exposure) {
    double orig[3];
    channel_means(original, orig);
    double total = orig[0] + orig[1] + orig[2];
    if (total <= 0.0)
      throw DegenerateInput("exposure_loss: original image is all zero");
    double ratios[3] = {orig[0] / total, orig[1] / total, orig[2] / total};
    double c0 = chroma_factor(ratios[0], ratios[1], ratios[2]);
    double enh[3];
    channel_means(enhanced, enh);
    for (int c = 0; c < 3; ++c) {
      double g = 2.0 * (enh[c] - lcfg.exp_alpha * ratios[c] * c0) / plane_n;
      double* d = d_enh.plane_ptr(c);
      for (std::size_t i = 0; i < d_enh.plane(); ++i) d[i] += g;
    }
  }

  if (mask.mscol) {
    // Local cell-mean term.
    long cells = static_cast<long>((h + lcfg.local_window - 1) / lcfg.local_window) *
                 ((w + lcfg.local_window - 1) / lcfg.local_window);
    for (int cy = 0; cy < h; cy += lcfg.local_window) {
      int y1 = std::min(cy + lcfg.local_window, h);
      for (int cx = 0; cx < w; cx += lcfg.local_window) {
        int x1 = std::min(cx + lcfg.local_window, w);
        double npix = static_cast<double>(y1 - cy) * (x1 - cx);
        for (int c = 0; c < 3; ++c) {
          const double* pe = enhanced.plane_ptr(c);
          const double* po = original.plane_ptr(c);
          double se = 0, so = 0;
          for (int y = cy; y < y1; ++y)
            for (int x = cx; x < x1; ++x) {
              se += pe[static_cast<std::size_t>(y) * w + x];
              so += po[static_cast<std::size_t>(y) * w + x];
            }
          double diff = se / npix - so / npix;
          double g = lcfg.lambda_local * 2.0 * diff /
                     (static_cast<double>(cells) * npix);
          double* d = d_enh.plane_ptr(c);
          for (int y = cy; y < y1; ++y)
            for (int x = cx; x < x1; ++x)
              d[static_cast<std::size_t>(y) * w + x] += g;
        }
      }
    }
    // Global gray-world term. With ref = mean of the channel means, the
    // deviations sum to zero, so d/dM_c collapses to 2*(M_c - ref).
    double enh[3];
    channel_means(enhanced, enh);
    double ref = (enh[0] + enh[1] + enh[2]) / 3.0;
    for (int c = 0; c < 3; ++c) {
      double g = lcfg.lambda_global * 2.0 * (enh[c] - ref) / plane_n;
      double* d = d_enh.plane_ptr(c);
      for (std::size_t i = 0; i < d_enh.plane(); ++i) d[i] += g;
    }
  }

  if (mask.tv) {
    const double norm = 1.0 / static_cast<double>(phi3.size());
    for (int c = 0; c < phi3.channels; ++c) {
      const double* p = phi3.plane_ptr(c);
      double* d = d_phi3.plane_ptr(c);
      auto pair_grad = [&](std::size_t lo, std::size_t hi) {
        double diff = p[hi] - p[lo];
        double wgt = std::exp(-lcfg.tv_beta * std::abs(diff));
        // d/d(diff) of w(diff)*diff^2; smooth at 0 since diff^2 dominates.
        double g = wgt * (2.0 * diff -
                          lcfg.tv_beta * (diff < 0 ? -1.0 : 1.0) * diff * diff) *
                   norm;
        d[hi] += g;
        d[lo] -= g;
      };
      for (int y = 0; y + 1 < phi3.height; ++y)
        for (int x = 0; x < phi3.width; ++x)
          pair_grad(static_cast<std::size_t>(y) * phi3.width + x,
                    static_cast<std::size_t>(y + 1) * phi3.width + x);
      for (int y = 0; y < phi3.height; ++y)
        for (int x = 0; x + 1 < phi3.width; ++x)
          pair_grad(static_cast<std::size_t>(y) * phi3.width + x,
                    static_cast<std::size_t>(y) * phi3.width + x + 1);
    }
  }
}

ImageD conv_input_grad(const ImageD& d_out, const BasicConvBlock<double>& blk,
                       int in_ch) {
  const int h = d_out.height, w = d_out.width;
  const int out_ch = d_out.channels;
  ImageD d_in(h, w, in_ch);
  for (int ci = 0; ci < in_ch; ++ci) {
    double* dst = d_in.plane_ptr(ci);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double acc = 0;
        for (int co = 0; co < out_ch; ++co) {
          const double* src = d_out.plane_ptr(co);
          const double* k =
              blk.kernel.data() + (static_cast<std::size_t>(co) * in_ch + ci) * 9;
          for (int ky = 0; ky < 3; ++ky) {
            int oy = y - (ky - 1);
            if (oy < 0 || oy >= h) continue;
            for (int kx = 0; kx < 3; ++kx) {
              int ox = x - (kx - 1);
              if (ox < 0 || ox >= w) continue;
              acc += src[static_cast<std::size_t>(oy) * w + ox] * k[ky * 3 + kx];
            }
          }
        }
        dst[static_cast<std::size_t>(y) * w + x] = acc;
      }
  }
  return d_in;
}

void conv_weight_grad(const ImageD& d_out, const ImageD& in,
                      BasicConvBlock<double>& d_blk) {
  const int h = d_out.height, w = d_out.width;
  const int out_ch = d_out.channels, in_ch = in.channels;
  for (int co = 0; co < out_ch; ++co) {
    const double* g = d_out.plane_ptr(co);
    for (int ci = 0; ci < in_ch; ++ci) {
      const double* src = in.plane_ptr(ci);
      double* dk =
          d_blk.kernel.data() + (static_cast<std::size_t>(co) * in_ch + ci) * 9;
      for (int ky = 0; ky < 3; ++ky)
        for (int kx = 0; kx < 3; ++kx) {
          double acc = 0;
          for (int y = 0; y < h; ++y) {
            int sy = y + ky - 1;
            if (sy < 0 || sy >= h) continue;
            const double* grow = g + static_cast<std::size_t>(y) * w;
            const double* srow = src + static_cast<std::size_t>(sy) * w;
            for (int x = 0; x < w; ++x) {
              int sx = x + kx - 1;
              if (sx < 0 || sx >= w) continue;
              acc += grow[x] * srow[sx];
            }
          }
          dk[ky * 3 + kx] += acc;
        }
    }
    double acc = 0;
    for (std::size_t i = 0; i < d_out.plane(); ++i) acc += g[i];
    d_blk.bias[co] += acc;
  }
}

// Backward through one stage of F: d_phi -> (weight grads, d(stage input)).
ImageD stage_backward(const WeightsD& w, const StageTrace& st, int stage_index,
                      const ImageD& d_phi, WeightsD* d_w) {
  const ImageD& a = st.z.back();
  ImageD d_a(a.height, a.width, a.channels);
  if (stage_index < 2) {
    for (std::size_t i = 0; i < a.size(); ++i)
      d_a.data[i] = a.data[i] > 0 ? d_phi.data[i] : 0.0;
  } else {
    for (std::size_t i = 0; i < a.size(); ++i) {
      double th = st.phi.data[i];  // tanh(a)
      d_a.data[i] = d_phi.data[i] * (1.0 - th * th);
    }
  }
  ImageD d_cur = std::move(d_a);
  for (int b = static_cast<int>(w.blocks.size()) - 1; b >= 0; --b) {
    if (d_w) conv_weight_grad(d_cur, st.z[b], d_w->blocks[b]);
    d_cur = conv_input_grad(d_cur, w.blocks[b], st.z[b].channels);
  }
  return d_cur;
}

WeightsD zero_like(const WeightsD& w) {
  WeightsD z;
  z.topology = w.topology;
  z.blocks.resize(w.blocks.size());
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    z.blocks[b].kernel.assign(w.blocks[b].kernel.size(), 0.0);
    z.blocks[b].bias.assign(w.blocks[b].bias.size(), 0.0);
  }
  return z;
}

// Reverse pass for one example; returns the loss breakdown and accumulates
// parameter gradients into d_w.
LossBreakdown example_backward(const WeightsD& w, const ImageD& img,
                               const EnhanceConfig& ecfg, const LossConfig& lcfg,
                               const GradOptions& opts, WeightsD& d_w) {
  ForwardTrace tr = forward_trace(w, img, ecfg, opts);
  const ImageD& enhanced = tr.x.back();
  const ImageD& phi3 = tr.stage[2].phi;
  LossBreakdown loss = masked_loss(enhanced, img, phi3, lcfg, opts.terms);

  const long n = static_cast<long>(img.size());
  ImageD d_enh, d_phi3(img.height, img.width, 3);
  loss_backward(enhanced, img, phi3, lcfg, opts.terms, d_enh, d_phi3);

  // Iterations, last to first. d_x starts as d(loss)/d(x_T).
  ImageD d_x = std::move(d_enh);
  ImageD d_g;
  if (ecfg.irm_enabled) d_g = ImageD(img.height, img.width, 3);
  for (int t = ecfg.iterations - 1; t >= 0; --t) {
    const ImageD& xt = tr.x[t];
    const ImageD& it = tr.itld[t];
    ImageD d_prev(img.height, img.width, 3);
    if (ecfg.irm_enabled) {
      const ImageD& y = tr.y[t];
      for (long i = 0; i < n; ++i) {
        double dy = d_x.data[i];
        if (ecfg.clamp_output && (y.data[i] <= 0.0 || y.data[i] >= 1.0)) dy = 0.0;
        double iv = it.data[i];
        d_g.data[i] += dy * (iv * iv - iv);
        double d_it = dy * (1.0 + (2.0 * iv - 1.0) * tr.g.data[i]);
        double v = xt.data[i];
        d_phi3.data[i] += d_it * (v * v - v);
        d_prev.data[i] = d_it * (1.0 + phi3.data[i] * (2.0 * v - 1.0));
      }
    } else {
      for (long i = 0; i < n; ++i) {
        double d_it = d_x.data[i];
        double v = xt.data[i];
        d_phi3.data[i] += d_it * (v * v - v);
        d_prev.data[i] = d_it * (1.0 + phi3.data[i] * (2.0 * v - 1.0));
      }
    }
    d_x = std::move(d_prev);
  }

  // Restoration map: g = (a1*tanh(phi1) + a2*tanh(phi2) + a3*tanh(phi3)) * x0.
  ImageD d_phi1(img.height, img.width, 3), d_phi2(img.height, img.width, 3);
  if (ecfg.irm_enabled) {
    const double alphas[3] = {ecfg.alpha1, ecfg.alpha2, ecfg.alpha3};
    ImageD* d_phis[3] = {&d_phi1, &d_phi2, &d_phi3};
    for (int s = 0; s < 3; ++s) {
      const ImageD& tphi = tr.stage[s].tphi;
      for (long i = 0; i < n; ++i) {
        double d_tphi = alphas[s] * tr.x0.data[i] * d_g.data[i];
        d_phis[s]->data[i] += d_tphi * (1.0 - tphi.data[i] * tphi.data[i]);
      }
    }
  }

  // Feature stages, last to first, so each d_phi is complete before its
  // stage runs. Weight gradients accumulate across every stage unless the
  // stage runs on frozen weights.
  const WeightsD* w23 = opts.frozen_stage23 ? opts.frozen_stage23 : &w;
  const bool track23 = opts.frozen_stage23 == nullptr;
  ImageD back3 = stage_backward(*w23, tr.stage[2], 2, d_phi3, track23 ? &d_w : nullptr);
  for (long i = 0; i < n; ++i) d_phi2.data[i] += back3.data[i];
  ImageD back2 = stage_backward(*w23, tr.stage[1], 1, d_phi2, track23 ? &d_w : nullptr);
  for (long i = 0; i < n; ++i) d_phi1.data[i] += back2.data[i];
  stage_backward(w, tr.stage[0], 0, d_phi1, &d_w);

  return loss;
}

double batch_forward_loss(const WeightsD& w, const std::vector<ImageD>& batch,
                          const EnhanceConfig& ecfg, const LossConfig& lcfg,
                          const GradOptions& opts) {
  CompensatedSum total;
  for (const ImageD& img : batch) {
    ForwardTrace tr = forward_trace(w, img, ecfg, opts);
    total.add(masked_loss(tr.x.back(), img, tr.stage[2].phi, lcfg, opts.terms).total);
  }
  return total.value() / static_cast<double>(batch.size());
}

}  // namespace

BatchLoss backward_gradients(const WeightsD& w, const std::vector<ImageD>& batch,
                             const EnhanceConfig& ecfg, const LossConfig& lcfg,
                             std::vector<double>& grad, const GradOptions& opts) {
  if (batch.empty()) throw InvalidArgument("backward_gradients: empty batch");
  validate_topology(w.topology);

  // Examples are independent; run them concurrently but merge their
  // gradients in example order so results do not depend on thread count.
  const int n = static_cast<int>(batch.size());
  std::vector<WeightsD> d_ws(n);
  std::vector<LossBreakdown> losses(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) {
    d_ws[i] = zero_like(w);
    losses[i] = example_backward(w, batch[i], ecfg, lcfg, opts, d_ws[i]);
  }

  WeightsD d_w = zero_like(w);
  BatchLoss out;
  for (int i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < d_w.blocks.size(); ++b) {
      for (std::size_t k = 0; k < d_w.blocks[b].kernel.size(); ++k)
        d_w.blocks[b].kernel[k] += d_ws[i].blocks[b].kernel[k];
      for (std::size_t k = 0; k < d_w.blocks[b].bias.size(); ++k)
        d_w.blocks[b].bias[k] += d_ws[i].blocks[b].bias[k];
    }
    out.total += losses[i].total;
    out.exposure += losses[i].exposure;
    out.tv += losses[i].tv;
    out.mscol += losses[i].mscol;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.total *= inv;
  out.exposure *= inv;
  out.tv *= inv;
  out.mscol *= inv;

  grad = flatten(d_w);
  for (double& g : grad) g *= inv;
  return out;
}

std::vector<double> fd_gradients(const WeightsD& w, const std::vector<ImageD>& batch,
                                 const EnhanceConfig& ecfg, const LossConfig& lcfg,
                                 double epsilon, const GradOptions& opts) {
  if (batch.empty()) throw InvalidArgument("fd_gradients: empty batch");
  if (epsilon <= 0) throw InvalidArgument("fd_gradients: epsilon must be > 0");

  std::vector<double> params = flatten(w);
  std::vector<double> grad(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    double saved = params[i];
    params[i] = saved + epsilon;
    double hi = batch_forward_loss(unflatten(w.topology, params), batch, ecfg,
                                   lcfg, opts);
    params[i] = saved - epsilon;
    double lo = batch_forward_loss(unflatten(w.topology, params), batch, ecfg,
                                   lcfg, opts);
    params[i] = saved;
    grad[i] = (hi - lo) / (2.0 * epsilon);
  }
  return grad;
}

ImageD enhance_reference(const WeightsD& w, const ImageD& img,
                         const EnhanceConfig& ecfg) {
  GradOptions opts;
  ForwardTrace tr = forward_trace(w, img, ecfg, opts);
  return tr.x.back();
}

namespace {

// Distance of the trace from the nearest activation/clamp breakpoint.
double kink_margin_of(const ForwardTrace& tr, const EnhanceConfig& ecfg) {
  double m = 1e300;
  for (int s = 0; s < 2; ++s)
    for (double v : tr.stage[s].z.back().data) m = std::min(m, std::abs(v));
  if (ecfg.irm_enabled && ecfg.clamp_output)
    for (const ImageD& y : tr.y)
      for (double v : y.data)
        m = std::min(m, std::min(std::abs(v), std::abs(1.0 - v)));
  return m;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

GradCheckSummary run_gradcheck(const NetTopology& topo, int cases, int T,
                               bool irm, std::uint64_t seed, int patch_size,
                               double epsilon, double kink_margin) {
  validate_topology(topo);
  if (cases < 1 || patch_size < 3)
    throw InvalidArgument("run_gradcheck: bad case count or patch size");

  EnhanceConfig ecfg;
  ecfg.iterations = T;
  ecfg.irm_enabled = irm;
  LossConfig lcfg;
  GradOptions opts;

  GradCheckSummary summary;
  const long n_params = param_count(topo);
  for (int c = 0; c < cases; ++c) {
    // Draw candidates until one is safely away from every breakpoint.
    WeightsD w;
    std::vector<ImageD> batch;
    bool found = false;
    for (int attempt = 0; attempt < 4096 && !found; ++attempt) {
      std::uint64_t s = splitmix64(seed + 0x1000003ULL * c + attempt);
      std::mt19937_64 rng(s);
      auto uniform = [&]() {
        return static_cast<double>(rng() >> 11) * 0x1.0p-53;
      };
      std::vector<double> params(n_params);
      for (auto& p : params) {
        // Box-Muller; sigma 0.1 keeps activations spread out.
        double u1 = 1.0 - uniform();
        double u2 = uniform();
        p = 0.1 * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      }
      w = unflatten(topo, params);
      ImageD patch(patch_size, patch_size, 3);
      for (auto& v : patch.data) v = 0.05 + 0.9 * uniform();
      ForwardTrace tr = forward_trace(w, patch, ecfg, opts);
      if (kink_margin_of(tr, ecfg) >= kink_margin) {
        batch = {std::move(patch)};
        found = true;
      }
    }
    if (!found)
      throw Error("run_gradcheck: could not find a smooth case; margin too strict");

    std::vector<double> analytic;
    backward_gradients(w, batch, ecfg, lcfg, analytic, opts);
    std::vector<double> fd = fd_gradients(w, batch, ecfg, lcfg, epsilon, opts);

    double dot = 0, na = 0, nf = 0;
    for (long i = 0; i < n_params; ++i) {
      double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), 1e-6});
      summary.max_rel_err =
          std::max(summary.max_rel_err, std::abs(analytic[i] - fd[i]) / denom);
      dot += analytic[i] * fd[i];
      na += analytic[i] * analytic[i];
      nf += fd[i] * fd[i];
    }
    if (na > 0 && nf > 0)
      summary.min_cosine =
          std::min(summary.min_cosine, dot / std::sqrt(na * nf));
    ++summary.cases;
  }
  return summary;
}

}  // namespace liteie
