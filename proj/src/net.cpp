#include "liteie/net.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <random>

#include "conv_rows.hpp"
#include "liteie/errors.hpp"
#include "liteie/mathutil.hpp"

namespace liteie {

void validate_topology(const NetTopology& t) {
  const auto& w = t.channel_widths;
  if (w.size() < 2) throw InvalidArgument("topology needs at least 2 widths");
  for (int v : w)
    if (v < 1) throw InvalidArgument("topology widths must be >= 1");
  if (w.front() != 3 || w.back() != 3)
    throw InvalidArgument("topology endpoints must be 3");
}

NetTopology parse_topology(const std::string& s) {
  NetTopology t;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t dash = s.find('-', pos);
    std::string part = s.substr(pos, dash == std::string::npos ? dash : dash - pos);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos)
      throw InvalidArgument("bad topology string: " + s);
    t.channel_widths.push_back(std::stoi(part));
    if (dash == std::string::npos) break;
    pos = dash + 1;
  }
  validate_topology(t);
  return t;
}

std::string topology_string(const NetTopology& t) {
  std::string s;
  for (std::size_t i = 0; i < t.channel_widths.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(t.channel_widths[i]);
  }
  return s;
}

long param_count(const NetTopology& t) {
  validate_topology(t);
  long total = 0;
  for (int b = 0; b < t.blocks(); ++b) {
    long in = t.channel_widths[b];
    long out = t.channel_widths[b + 1];
    total += out * in * 9 + out;
  }
  return total;
}

WeightsD widen(const Weights& w) {
  WeightsD out;
  out.topology = w.topology;
  out.blocks.resize(w.blocks.size());
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    out.blocks[b].kernel.assign(w.blocks[b].kernel.begin(), w.blocks[b].kernel.end());
    out.blocks[b].bias.assign(w.blocks[b].bias.begin(), w.blocks[b].bias.end());
  }
  return out;
}

Weights narrow(const WeightsD& w) {
  Weights out;
  out.topology = w.topology;
  out.blocks.resize(w.blocks.size());
  for (std::size_t b = 0; b < w.blocks.size(); ++b) {
    out.blocks[b].kernel.assign(w.blocks[b].kernel.begin(), w.blocks[b].kernel.end());
    out.blocks[b].bias.assign(w.blocks[b].bias.begin(), w.blocks[b].bias.end());
  }
  return out;
}

namespace {

// Hand-rolled Box-Muller on top of mt19937_64 so the draw sequence is fully
// specified (std::normal_distribution is implementation-defined).
struct GaussianDraw {
  std::mt19937_64 rng;
  double spare = 0.0;
  bool has_spare = false;

  explicit GaussianDraw(std::uint64_t seed) : rng(seed) {}

  double uniform01() {
    // 53-bit mantissa in [0,1).
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  }

  double next() {
    if (has_spare) {
      has_spare = false;
      return spare;
    }
    double u1 = 1.0 - uniform01();  // (0,1], keeps log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare = r * std::sin(a);
    has_spare = true;
    return r * std::cos(a);
  }
};

}  // namespace

Weights init_weights(const NetTopology& t, std::uint64_t seed) {
  validate_topology(t);
  Weights w;
  w.topology = t;
  GaussianDraw gauss(seed);
  for (int b = 0; b < t.blocks(); ++b) {
    int in = t.channel_widths[b];
    int out = t.channel_widths[b + 1];
    BasicConvBlock<float> blk;
    blk.kernel.resize(static_cast<std::size_t>(out) * in * 9);
    for (auto& v : blk.kernel) v = static_cast<float>(0.02 * gauss.next());
    blk.bias.assign(out, 0.0f);
    w.blocks.push_back(std::move(blk));
  }
  return w;
}

std::vector<double> flatten(const WeightsD& w) {
  std::vector<double> out;
  out.reserve(param_count(w.topology));
  for (const auto& blk : w.blocks) {
    out.insert(out.end(), blk.kernel.begin(), blk.kernel.end());
    out.insert(out.end(), blk.bias.begin(), blk.bias.end());
  }
  return out;
}

WeightsD unflatten(const NetTopology& t, const std::vector<double>& params) {
  if (static_cast<long>(params.size()) != param_count(t))
    throw InvalidArgument("unflatten: parameter count mismatch");
  WeightsD w;
  w.topology = t;
  std::size_t pos = 0;
  for (int b = 0; b < t.blocks(); ++b) {
    int in = t.channel_widths[b];
    int out = t.channel_widths[b + 1];
    BasicConvBlock<double> blk;
    blk.kernel.assign(params.begin() + pos, params.begin() + pos + static_cast<std::size_t>(out) * in * 9);
    pos += blk.kernel.size();
    blk.bias.assign(params.begin() + pos, params.begin() + pos + out);
    pos += out;
    w.blocks.push_back(std::move(blk));
  }
  return w;
}

namespace {

constexpr char kMagic[4] = {'L', 'I', 'E', '1'};
constexpr std::uint16_t kVersion = 1;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void put_u16(std::FILE* f, std::uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>(v >> 8)};
  std::fwrite(b, 1, 2, f);
}

std::uint16_t get_u16(std::FILE* f, const std::string& path) {
  unsigned char b[2];
  if (std::fread(b, 1, 2, f) != 2) throw FormatError("truncated weights file: " + path);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void put_f32(std::FILE* f, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  unsigned char b[4] = {static_cast<unsigned char>(bits & 0xff),
                        static_cast<unsigned char>((bits >> 8) & 0xff),
                        static_cast<unsigned char>((bits >> 16) & 0xff),
                        static_cast<unsigned char>((bits >> 24) & 0xff)};
  std::fwrite(b, 1, 4, f);
}

float get_f32(std::FILE* f, const std::string& path) {
  unsigned char b[4];
  if (std::fread(b, 1, 4, f) != 4) throw FormatError("truncated weights file: " + path);
  std::uint32_t bits = static_cast<std::uint32_t>(b[0]) |
                       (static_cast<std::uint32_t>(b[1]) << 8) |
                       (static_cast<std::uint32_t>(b[2]) << 16) |
                       (static_cast<std::uint32_t>(b[3]) << 24);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void serialize_weights(const Weights& w, const std::string& path) {
  validate_topology(w.topology);
  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write: " + path);
  std::fwrite(kMagic, 1, 4, f.get());
  put_u16(f.get(), kVersion);
  put_u16(f.get(), static_cast<std::uint16_t>(w.topology.blocks()));
  for (int v : w.topology.channel_widths)
    put_u16(f.get(), static_cast<std::uint16_t>(v));
  for (const auto& blk : w.blocks) {
    for (float v : blk.kernel) put_f32(f.get(), v);
    for (float v : blk.bias) put_f32(f.get(), v);
  }
  if (std::ferror(f.get())) throw IoError("write failed: " + path);
}

Weights deserialize_weights(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw NotFound("no such file: " + path);
  char magic[4];
  if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, kMagic, 4) != 0)
    throw FormatError("bad magic: " + path);
  if (get_u16(f.get(), path) != kVersion)
    throw FormatError("unsupported version: " + path);
  int blocks = get_u16(f.get(), path);
  NetTopology t;
  for (int i = 0; i < blocks + 1; ++i)
    t.channel_widths.push_back(get_u16(f.get(), path));
  try {
    validate_topology(t);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("bad topology in weights file: ") + e.what());
  }

  Weights w;
  w.topology = t;
  for (int b = 0; b < blocks; ++b) {
    int in = t.channel_widths[b];
    int out = t.channel_widths[b + 1];
    BasicConvBlock<float> blk;
    blk.kernel.resize(static_cast<std::size_t>(out) * in * 9);
    for (auto& v : blk.kernel) v = get_f32(f.get(), path);
    blk.bias.resize(out);
    for (auto& v : blk.bias) v = get_f32(f.get(), path);
    w.blocks.push_back(std::move(blk));
  }
  if (std::fgetc(f.get()) != EOF)
    throw FormatError("trailing bytes in weights file: " + path);
  return w;
}

namespace {

using detail::ActNone;
using detail::ActRelu;
using detail::ActTanh;

// The stage activation is applied in the store of the final accumulation
// pass, saving a full rewrite of the output.
template <typename T, typename Act>
Image<T> conv3x3_act(const Image<T>& in, const std::vector<T>& kernel,
                     const std::vector<T>& bias, Act act) {
  const int in_ch = in.channels;
  const int out_ch = static_cast<int>(bias.size());
  if (out_ch < 1 ||
      kernel.size() != static_cast<std::size_t>(out_ch) * in_ch * 9)
    throw ShapeError("conv3x3_same: kernel/bias size does not match channels");

  const int h = in.height, w = in.width;
  Image<T> out(h, w, out_ch);
#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y)
    for (int co = 0; co < out_ch; ++co)
      detail::conv3x3_row(in, kernel, bias, co, y, act,
                          out.plane_ptr(co) + static_cast<std::size_t>(y) * w);
  return out;
}

template <typename T, typename Act>
Image<T> apply_operator(const BasicWeights<T>& w, const Image<T>& in, Act act) {
  const std::size_t last = w.blocks.size() - 1;
  if (last == 0)
    return conv3x3_act(in, w.blocks[0].kernel, w.blocks[0].bias, act);
  Image<T> cur = conv3x3_act(in, w.blocks[0].kernel, w.blocks[0].bias, ActNone{});
  for (std::size_t b = 1; b < last; ++b)
    cur = conv3x3_act(cur, w.blocks[b].kernel, w.blocks[b].bias, ActNone{});
  return conv3x3_act(cur, w.blocks[last].kernel, w.blocks[last].bias, act);
}

}  // namespace

template <typename T>
Image<T> conv3x3_same(const Image<T>& in, const std::vector<T>& kernel,
                      const std::vector<T>& bias) {
  return conv3x3_act(in, kernel, bias, ActNone{});
}

template Image<float> conv3x3_same(const Image<float>&, const std::vector<float>&,
                                   const std::vector<float>&);
template Image<double> conv3x3_same(const Image<double>&, const std::vector<double>&,
                                    const std::vector<double>&);

template <typename T>
BasicFeaturePyramid<T> extract_features(const BasicWeights<T>& w,
                                        const Image<T>& img) {
  if (img.channels != 3) throw ShapeError("extract_features: input must have 3 channels");
  validate_topology(w.topology);

  BasicFeaturePyramid<T> pyr;
  pyr.phi1 = apply_operator(w, img, ActRelu{});
  pyr.phi2 = apply_operator(w, pyr.phi1, ActRelu{});
  pyr.phi3 = apply_operator(w, pyr.phi2, ActTanh{});
  return pyr;
}

template BasicFeaturePyramid<float> extract_features(const BasicWeights<float>&,
                                                     const Image<float>&);
template BasicFeaturePyramid<double> extract_features(const BasicWeights<double>&,
                                                      const Image<double>&);

}  // namespace liteie
