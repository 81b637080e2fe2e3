#pragma once

#include "liteie/enhance.hpp"
#include "liteie/image.hpp"
#include "liteie/net.hpp"

// Plain single-threaded reference kernels. These mirror the OpenMP kernels
// line for line (minus the pragmas) and must produce bit-identical results;
// tests and the kernel benchmark compare the two.
namespace liteie::serial {

ImageTensor conv3x3_same(const ImageTensor& in, const std::vector<float>& kernel,
                         const std::vector<float>& bias);

FeaturePyramid extract_features(const Weights& w, const ImageTensor& img);

ImageTensor enhance_image(const Weights& w, const ImageTensor& img,
                          const EnhanceConfig& cfg);

}  // namespace liteie::serial
