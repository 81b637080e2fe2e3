#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include <png.h>

#include "liteie/errors.hpp"
#include "liteie/image_io.hpp"
#include "oracles.hpp"

using namespace liteie;

namespace {

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>());
}

// Minimal 8-bit grayscale PNG writer, used to exercise the gray->RGB
// expansion in the loader (the library itself only writes RGB).
void write_gray_png(const std::string& path, int h, int w,
                    const std::vector<unsigned char>& pixels) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  REQUIRE(fp != nullptr);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  REQUIRE(setjmp(png_jmpbuf(png)) == 0);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y)
    png_write_row(png, const_cast<png_bytep>(&pixels[static_cast<std::size_t>(y) * w]));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

ImageTensor quantize8(const ImageTensor& img) {
  ImageTensor out = img;
  for (auto& v : out.data) {
    float c = std::min(std::max(v, 0.0f), 1.0f);
    v = static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
  }
  return out;
}

}  // namespace

TEST_CASE("png save/load round-trips through 8-bit quantization") {
  oracle::TempDir td("io-roundtrip");
  ImageTensor img = oracle::random_image(13, 21, 3, 42);
  // A few deliberately out-of-range values must clamp on save.
  img.data[0] = 1.7f;
  img.data[5] = -0.3f;

  save_image(img, td.file("a.png"));
  ImageTensor back = load_image(td.file("a.png"));

  ImageTensor expect = quantize8(img);
  REQUIRE(back.same_shape(expect));
  for (std::size_t i = 0; i < back.size(); ++i)
    CHECK(back.data[i] == expect.data[i]);
}

TEST_CASE("ppm save/load round-trips and matches the png path") {
  oracle::TempDir td("io-ppm");
  ImageTensor img = oracle::random_image(9, 7, 3, 7);
  save_image(img, td.file("a.ppm"));
  save_image(img, td.file("a.png"));
  ImageTensor from_ppm = load_image(td.file("a.ppm"));
  ImageTensor from_png = load_image(td.file("a.png"));
  REQUIRE(from_ppm.same_shape(from_png));
  for (std::size_t i = 0; i < from_ppm.size(); ++i)
    CHECK(from_ppm.data[i] == from_png.data[i]);
}

TEST_CASE("pixel bytes map to value/255") {
  oracle::TempDir td("io-bytes");
  // 2x2 RGB PPM written by hand: bytes 0,128,255 land at 0, 128/255, 1.
  std::string ppm = "P6\n2 2\n255\n";
  const unsigned char px[12] = {0, 128, 255, 10, 20, 30, 40, 50, 60, 70, 80, 90};
  ppm.append(reinterpret_cast<const char*>(px), 12);
  write_file(td.file("b.ppm"), ppm);

  ImageTensor t = load_image(td.file("b.ppm"));
  REQUIRE(t.height == 2);
  REQUIRE(t.width == 2);
  REQUIRE(t.channels == 3);
  CHECK(t.at(0, 0, 0) == 0.0f);
  CHECK(t.at(1, 0, 0) == 128.0f / 255.0f);
  CHECK(t.at(2, 0, 0) == 1.0f);
  CHECK(t.at(0, 1, 1) == 70.0f / 255.0f);
}

TEST_CASE("ppm header comments are skipped") {
  oracle::TempDir td("io-comments");
  std::string ppm = "P6\n# a comment\n3 # trailing\n# another\n1\n255\n";
  for (int i = 0; i < 9; ++i) ppm.push_back(static_cast<char>(i * 20));
  write_file(td.file("c.ppm"), ppm);
  ImageTensor t = load_image(td.file("c.ppm"));
  CHECK(t.width == 3);
  CHECK(t.height == 1);
  CHECK(t.at(0, 0, 1) == 60.0f / 255.0f);
}

TEST_CASE("quantization is round-half-up at the byte level") {
  oracle::TempDir td("io-quant");
  save_image(ImageTensor(2, 2, 3, 0.5f), td.file("half.ppm"));
  std::string bytes = read_file(td.file("half.ppm"));
  // Header "P6\n2 2\n255\n" is 11 bytes; every pixel byte must be 128.
  REQUIRE(bytes.size() == 11 + 12);
  for (std::size_t i = 11; i < bytes.size(); ++i)
    CHECK(static_cast<unsigned char>(bytes[i]) == 128);

  save_image(ImageTensor(1, 1, 3, 1.2f), td.file("over.ppm"));
  std::string over = read_file(td.file("over.ppm"));
  for (std::size_t i = over.size() - 3; i < over.size(); ++i)
    CHECK(static_cast<unsigned char>(over[i]) == 255);

  save_image(ImageTensor(1, 1, 3, -0.4f), td.file("under.ppm"));
  std::string under = read_file(td.file("under.ppm"));
  for (std::size_t i = under.size() - 3; i < under.size(); ++i)
    CHECK(static_cast<unsigned char>(under[i]) == 0);
}

TEST_CASE("grayscale png is replicated to three channels") {
  oracle::TempDir td("io-gray");
  std::vector<unsigned char> px = {0, 51, 102, 153, 204, 255};
  write_gray_png(td.file("g.png"), 2, 3, px);
  ImageTensor t = load_image(td.file("g.png"));
  REQUIRE(t.channels == 3);
  REQUIRE(t.height == 2);
  REQUIRE(t.width == 3);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) {
      float v = px[static_cast<std::size_t>(y) * 3 + x] / 255.0f;
      CHECK(t.at(0, y, x) == v);
      CHECK(t.at(1, y, x) == v);
      CHECK(t.at(2, y, x) == v);
    }
}

TEST_CASE("loader error cases") {
  oracle::TempDir td("io-errors");
  CHECK_THROWS_AS(load_image(td.file("none.png")), NotFound);

  write_file(td.file("junk.png"), "this is not an image at all........");
  CHECK_THROWS_AS(load_image(td.file("junk.png")), DecodeError);

  // Truncated PPM payload.
  write_file(td.file("short.ppm"), "P6\n4 4\n255\nxy");
  CHECK_THROWS_AS(load_image(td.file("short.ppm")), DecodeError);
}

TEST_CASE("save to an unwritable path raises IoError") {
  ImageTensor img(2, 2, 3, 0.5f);
  CHECK_THROWS_AS(save_image(img, "/no-such-dir-anywhere/x.png"), IoError);
  CHECK_THROWS_AS(save_image(img, "/no-such-dir-anywhere/x.ppm"), IoError);
}

TEST_CASE("resize identity and constants") {
  ImageTensor img = oracle::random_image(6, 5, 3, 3);
  ImageTensor same = resize_bilinear(img, 6, 5);
  REQUIRE(same.same_shape(img));
  for (std::size_t i = 0; i < img.size(); ++i) CHECK(same.data[i] == img.data[i]);

  ImageTensor c(4, 9, 3, 0.37f);
  for (auto [h, w] : {std::pair{1, 1}, {2, 13}, {17, 3}, {8, 8}}) {
    ImageTensor r = resize_bilinear(c, h, w);
    REQUIRE(r.height == h);
    REQUIRE(r.width == w);
    for (float v : r.data) CHECK(v == doctest::Approx(0.37f).epsilon(1e-6));
  }

  CHECK_THROWS_AS(resize_bilinear(img, 0, 5), InvalidArgument);
  CHECK_THROWS_AS(resize_bilinear(img, 5, 0), InvalidArgument);
}

TEST_CASE("resize matches the direct interpolation oracle") {
  for (std::uint32_t seed = 0; seed < 8; ++seed) {
    ImageTensor img = oracle::random_image(7, 5, 3, 100 + seed);
    for (auto [h, w] : {std::pair{3, 4}, {14, 10}, {7, 9}, {2, 2}}) {
      ImageTensor got = resize_bilinear(img, h, w);
      ImageTensor want = oracle::bilinear(img, h, w);
      REQUIRE(got.same_shape(want));
      for (std::size_t i = 0; i < got.size(); ++i) {
        CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-6));
        CHECK(got.data[i] >= 0.0f);
        CHECK(got.data[i] <= 1.0f);
      }
    }
  }
}

TEST_CASE("random_crop is deterministic and in bounds") {
  // Tag each pixel with its flat index so the offset is recoverable.
  const int H = 100, W = 100, S = 32;
  ImageTensor img(H, W, 3);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      img.at(0, y, x) = static_cast<float>(y) / H;
      img.at(1, y, x) = static_cast<float>(x) / W;
      img.at(2, y, x) = 0.5f;
    }

  ImageTensor whole = random_crop(img, 100, 9);
  for (std::size_t i = 0; i < img.size(); ++i)
    CHECK(whole.data[i] == img.data[i]);

  ImageTensor a = random_crop(img, S, 77);
  ImageTensor b = random_crop(img, S, 77);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data[i] == b.data[i]);

  std::set<std::pair<int, int>> offsets;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    ImageTensor crop = random_crop(img, S, seed);
    REQUIRE(crop.height == S);
    REQUIRE(crop.width == S);
    int oy = static_cast<int>(std::lround(crop.at(0, 0, 0) * H));
    int ox = static_cast<int>(std::lround(crop.at(1, 0, 0) * W));
    CHECK(oy >= 0);
    CHECK(oy <= H - S);
    CHECK(ox >= 0);
    CHECK(ox <= W - S);
    // The whole crop must be the contiguous block at that offset.
    for (int y = 0; y < S; y += 7)
      for (int x = 0; x < S; x += 7) {
        CHECK(crop.at(0, y, x) == img.at(0, oy + y, ox + x));
        CHECK(crop.at(1, y, x) == img.at(1, oy + y, ox + x));
      }
    offsets.insert({oy, ox});
  }
  CHECK(offsets.size() > 10);  // seeds actually move the window

  CHECK_THROWS_AS(random_crop(img, 101, 0), InvalidArgument);
}
