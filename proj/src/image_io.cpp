#include "liteie/image_io.hpp"

#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>
#include <random>
#include <vector>

#include "liteie/errors.hpp"
#include "liteie/mathutil.hpp"

namespace liteie {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix_ci(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  for (std::size_t i = 0; i < suffix.size(); ++i) {
    char a = static_cast<char>(std::tolower(static_cast<unsigned char>(
        s[s.size() - suffix.size() + i])));
    if (a != suffix[i]) return false;
  }
  return true;
}

ImageTensor from_rgb8(const std::vector<unsigned char>& rgb, int h, int w) {
  ImageTensor img(h, w, 3);
  for (int c = 0; c < 3; ++c) {
    float* plane = img.plane_ptr(c);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        plane[static_cast<std::size_t>(y) * w + x] =
            rgb[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0f;
  }
  return img;
}

ImageTensor load_png(std::FILE* f, const std::string& path) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw DecodeError("png init failed: " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw DecodeError("png init failed: " + path);
  }
  std::vector<unsigned char> rgb;
  int h = 0, w = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("undecodable png: " + path);
  }
  png_init_io(png, f);
  png_read_info(png, info);

  w = static_cast<int>(png_get_image_width(png, info));
  h = static_cast<int>(png_get_image_height(png, info));
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  if (png_get_channels(png, info) != 3 || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DecodeError("unsupported png layout: " + path);
  }

  rgb.resize(static_cast<std::size_t>(h) * w * 3);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = rgb.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_rgb8(rgb, h, w);
}

ImageTensor load_ppm(std::FILE* f, const std::string& path) {
  // Binary PPM: "P6" <ws> width <ws> height <ws> maxval <single ws> data.
  // '#' comments are allowed in the header.
  auto next_token = [&]() -> long {
    int ch;
    for (;;) {
      ch = std::fgetc(f);
      if (ch == '#') {
        while (ch != '\n' && ch != EOF) ch = std::fgetc(f);
      } else if (!std::isspace(ch)) {
        break;
      }
    }
    long v = 0;
    bool any = false;
    while (std::isdigit(ch)) {
      v = v * 10 + (ch - '0');
      any = true;
      ch = std::fgetc(f);
    }
    if (!any) throw DecodeError("bad ppm header: " + path);
    return v;
  };
  long w = next_token();
  long h = next_token();
  long maxval = next_token();
  if (w < 1 || h < 1 || maxval != 255)
    throw DecodeError("unsupported ppm: " + path);
  std::vector<unsigned char> rgb(static_cast<std::size_t>(h) * w * 3);
  if (std::fread(rgb.data(), 1, rgb.size(), f) != rgb.size())
    throw DecodeError("truncated ppm: " + path);
  return from_rgb8(rgb, static_cast<int>(h), static_cast<int>(w));
}

}  // namespace

ImageTensor load_image(const std::string& path) {
  FilePtr f(std::fopen(path.c_str(), "rb"));
  if (!f) throw NotFound("no such file: " + path);

  unsigned char sig[8] = {0};
  std::size_t n = std::fread(sig, 1, sizeof(sig), f.get());
  std::rewind(f.get());
  if (n >= 8 && png_sig_cmp(sig, 0, 8) == 0) return load_png(f.get(), path);
  if (n >= 2 && sig[0] == 'P' && sig[1] == '6') {
    std::fseek(f.get(), 2, SEEK_SET);
    return load_ppm(f.get(), path);
  }
  throw DecodeError("unrecognized image format: " + path);
}

void save_image(const ImageTensor& img, const std::string& path) {
  if (img.height < 1 || img.width < 1 ||
      (img.channels != 1 && img.channels != 3))
    throw InvalidArgument("save_image: bad tensor shape");

  const int h = img.height, w = img.width;
  // Quantize: clamp, scale by 255, round half up.
  std::vector<unsigned char> rgb(static_cast<std::size_t>(h) * w * 3);
  for (int c = 0; c < 3; ++c) {
    const float* plane = img.plane_ptr(img.channels == 3 ? c : 0);
    for (std::size_t i = 0; i < img.plane(); ++i) {
      float v = clamp01(plane[i]);
      rgb[i * 3 + c] = static_cast<unsigned char>(std::lround(v * 255.0f));
    }
  }

  FilePtr f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot write: " + path);

  if (has_suffix_ci(path, ".ppm")) {
    std::fprintf(f.get(), "P6\n%d %d\n255\n", w, h);
    if (std::fwrite(rgb.data(), 1, rgb.size(), f.get()) != rgb.size())
      throw IoError("short write: " + path);
    return;
  }

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("png init failed: " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("png init failed: " + path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("png write failed: " + path);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = rgb.data() + static_cast<std::size_t>(y) * w * 3;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageTensor resize_bilinear(const ImageTensor& img, int new_h, int new_w) {
  if (new_h < 1 || new_w < 1)
    throw InvalidArgument("resize_bilinear: target dimensions must be >= 1");
  if (img.height < 1 || img.width < 1)
    throw InvalidArgument("resize_bilinear: empty source");

  ImageTensor out(new_h, new_w, img.channels);
  const double sy = static_cast<double>(img.height) / new_h;
  const double sx = static_cast<double>(img.width) / new_w;
  for (int c = 0; c < img.channels; ++c) {
    const float* src = img.plane_ptr(c);
    float* dst = out.plane_ptr(c);
    for (int y = 0; y < new_h; ++y) {
      double fy = (y + 0.5) * sy - 0.5;
      if (fy < 0) fy = 0;
      if (fy > img.height - 1) fy = img.height - 1;
      int y0 = static_cast<int>(fy);
      int y1 = std::min(y0 + 1, img.height - 1);
      double wy = fy - y0;
      for (int x = 0; x < new_w; ++x) {
        double fx = (x + 0.5) * sx - 0.5;
        if (fx < 0) fx = 0;
        if (fx > img.width - 1) fx = img.width - 1;
        int x0 = static_cast<int>(fx);
        int x1 = std::min(x0 + 1, img.width - 1);
        double wx = fx - x0;
        double top = src[static_cast<std::size_t>(y0) * img.width + x0] * (1 - wx) +
                     src[static_cast<std::size_t>(y0) * img.width + x1] * wx;
        double bot = src[static_cast<std::size_t>(y1) * img.width + x0] * (1 - wx) +
                     src[static_cast<std::size_t>(y1) * img.width + x1] * wx;
        dst[static_cast<std::size_t>(y) * new_w + x] =
            static_cast<float>(top * (1 - wy) + bot * wy);
      }
    }
  }
  return out;
}

ImageTensor random_crop(const ImageTensor& img, int size, std::uint64_t seed) {
  if (size < 1 || size > img.height || size > img.width)
    throw InvalidArgument("random_crop: size exceeds image bounds");
  std::mt19937_64 rng(seed);
  int oy = static_cast<int>(rng() % static_cast<std::uint64_t>(img.height - size + 1));
  int ox = static_cast<int>(rng() % static_cast<std::uint64_t>(img.width - size + 1));
  ImageTensor out(size, size, img.channels);
  for (int c = 0; c < img.channels; ++c) {
    const float* src = img.plane_ptr(c);
    float* dst = out.plane_ptr(c);
    for (int y = 0; y < size; ++y)
      std::memcpy(dst + static_cast<std::size_t>(y) * size,
                  src + (static_cast<std::size_t>(oy + y)) * img.width + ox,
                  sizeof(float) * size);
  }
  return out;
}

}  // namespace liteie
