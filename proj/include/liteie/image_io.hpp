#pragma once

#include <cstdint>
#include <string>

#include "liteie/image.hpp"

namespace liteie {

// Decodes an 8-bit PNG or binary PPM (P6). Values are mapped to [0,1] by
// dividing by 255; grayscale sources are replicated to 3 channels.
ImageTensor load_image(const std::string& path);

// Clamps to [0,1], quantizes with round-half-up to 8 bits and writes PNG,
// or binary PPM when the path ends in ".ppm".
void save_image(const ImageTensor& img, const std::string& path);

// Bilinear resampling with half-pixel-center alignment.
ImageTensor resize_bilinear(const ImageTensor& img, int new_h, int new_w);

// size x size crop fully inside bounds, offsets drawn deterministically
// from the seed.
ImageTensor random_crop(const ImageTensor& img, int size, std::uint64_t seed);

}  // namespace liteie
