#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "liteie/image.hpp"

namespace liteie {

// Channel widths of the shared operator F, e.g. {3,1,3}. Endpoints are
// always 3 (RGB in, RGB out); each consecutive pair is one 3x3 convolution.
struct NetTopology {
  std::vector<int> channel_widths;

  int blocks() const { return static_cast<int>(channel_widths.size()) - 1; }
};

// Throws InvalidArgument unless length >= 2, all widths >= 1, endpoints == 3.
void validate_topology(const NetTopology& t);

// "3-1-3" <-> {3,1,3}
NetTopology parse_topology(const std::string& s);
std::string topology_string(const NetTopology& t);

// Total scalar count: sum over blocks of out*in*9 + out.
long param_count(const NetTopology& t);

template <typename T>
struct BasicConvBlock {
  // Kernel layout: out-major, then in, then ky, then kx (out*in*3*3 values).
  std::vector<T> kernel;
  std::vector<T> bias;
};

template <typename T>
struct BasicWeights {
  NetTopology topology;
  std::vector<BasicConvBlock<T>> blocks;
};

using Weights = BasicWeights<float>;
using WeightsD = BasicWeights<double>;

WeightsD widen(const Weights& w);
Weights narrow(const WeightsD& w);

// Kernels ~ Gaussian(0, 0.02^2), biases zero; identical bits for a given seed.
Weights init_weights(const NetTopology& t, std::uint64_t seed);

// Flat parameter order matches the file format: per block kernels then
// biases, blocks in order.
std::vector<double> flatten(const WeightsD& w);
WeightsD unflatten(const NetTopology& t, const std::vector<double>& params);

void serialize_weights(const Weights& w, const std::string& path);
Weights deserialize_weights(const std::string& path);

// 3x3 convolution (cross-correlation), stride 1, zero padding 1. The kernel
// holds bias.size() * in.channels * 9 values.
template <typename T>
Image<T> conv3x3_same(const Image<T>& in, const std::vector<T>& kernel,
                      const std::vector<T>& bias);

template <typename T>
struct BasicFeaturePyramid {
  Image<T> phi1, phi2, phi3;
};

using FeaturePyramid = BasicFeaturePyramid<float>;
using FeaturePyramidD = BasicFeaturePyramid<double>;

// Three stages of the shared operator: phi1 = ReLU(F(I)), phi2 = ReLU(F(phi1)),
// phi3 = Tanh(F(phi2)). Inside F the blocks chain with identity activation;
// the stage activation applies to F's output only. The same weights are used
// for every stage.
template <typename T>
BasicFeaturePyramid<T> extract_features(const BasicWeights<T>& w,
                                        const Image<T>& img);

}  // namespace liteie
