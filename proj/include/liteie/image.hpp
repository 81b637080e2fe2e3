#pragma once

#include <cstddef>
#include <vector>

namespace liteie {

// Planar (channel-major) pixel grid: data[(c*height + y)*width + x].
// Images hold intensities in [0,1]; feature maps reuse the same container
// with unconstrained values. Planar layout keeps each channel's rows
// contiguous for the 3x3 convolutions.
template <typename T>
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<T> data;

  Image() = default;
  Image(int h, int w, int c, T fill = T(0))
      : height(h), width(w), channels(c),
        data(static_cast<std::size_t>(h) * w * c, fill) {}

  std::size_t size() const { return data.size(); }
  std::size_t plane() const { return static_cast<std::size_t>(height) * width; }

  T* plane_ptr(int c) { return data.data() + static_cast<std::size_t>(c) * plane(); }
  const T* plane_ptr(int c) const {
    return data.data() + static_cast<std::size_t>(c) * plane();
  }

  T& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  const T& at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }

  bool same_shape(const Image& o) const {
    return height == o.height && width == o.width && channels == o.channels;
  }
};

using ImageTensor = Image<float>;
using ImageD = Image<double>;

inline ImageD widen(const ImageTensor& img) {
  ImageD out(img.height, img.width, img.channels);
  for (std::size_t i = 0; i < img.size(); ++i) out.data[i] = img.data[i];
  return out;
}

inline ImageTensor narrow(const ImageD& img) {
  ImageTensor out(img.height, img.width, img.channels);
  for (std::size_t i = 0; i < img.size(); ++i)
    out.data[i] = static_cast<float>(img.data[i]);
  return out;
}

}  // namespace liteie
