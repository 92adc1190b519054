#include "absplat/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace absplat {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::string& what, const std::string& path) {
  throw std::runtime_error(what + ": " + path);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), s.rbegin(),
                    [](char a, char b) { return std::tolower(a) == std::tolower(b); });
}

}  // namespace

Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail("cannot open image", path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail("png init failed", path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail("png init failed", path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("malformed png", path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::vector<png_byte> row(png_get_rowbytes(png, info));
  Image image{int(w), int(h)};
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        image.at(int(x), int(y), c) = row[x * 3 + c] / 255.0;
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void save_png(const Image& image, const std::string& path) {
  if (image.empty()) throw std::invalid_argument("cannot save empty image");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail("cannot write image", path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail("png init failed", path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail("png init failed", path);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("png write failed", path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(image.width()), png_uint_32(image.height()), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<png_byte> row(std::size_t(image.width()) * 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) {
        const Scalar v = std::clamp(image.at(x, y, c), 0.0, 1.0);
        row[std::size_t(x) * 3 + c] = png_byte(std::lround(v * 255.0));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

namespace {

void write_pfm_header(std::ofstream& out, const char* magic, int w, int h) {
  out << magic << "\n" << w << " " << h << "\n" << "-1.0" << "\n";
}

}  // namespace

void save_pfm(const Image& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write image", path);
  write_pfm_header(out, "PF", image.width(), image.height());
  // PFM stores rows bottom-up.
  std::vector<float> row(std::size_t(image.width()) * 3);
  for (int y = image.height() - 1; y >= 0; --y) {
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c) row[std::size_t(x) * 3 + c] = float(image.at(x, y, c));
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size() * sizeof(float)));
  }
  if (!out) fail("png write failed", path);
}

void save_pfm_gray(const std::vector<Scalar>& values, int width, int height,
                   const std::string& path) {
  if (values.size() != std::size_t(width) * height)
    throw std::invalid_argument("pfm payload size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("cannot write image", path);
  write_pfm_header(out, "Pf", width, height);
  std::vector<float> row(std::size_t(width), 0.0f);
  for (int y = height - 1; y >= 0; --y) {
    for (int x = 0; x < width; ++x) row[std::size_t(x)] = float(values[std::size_t(y) * width + x]);
    out.write(reinterpret_cast<const char*>(row.data()),
              std::streamsize(row.size() * sizeof(float)));
  }
}

Image load_pfm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot open image", path);
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0 || scale == 0.0)
    fail("malformed pfm", path);
  in.get();  // single whitespace after the header
  const int channels = magic == "PF" ? 3 : 1;
  const bool little_endian = scale < 0.0;
  if (!little_endian) fail("big-endian pfm unsupported", path);

  Image image(w, h);
  std::vector<float> row(std::size_t(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * sizeof(float)));
    if (!in) fail("truncated pfm", path);
    for (int x = 0; x < w; ++x) {
      if (channels == 3) {
        for (int c = 0; c < 3; ++c) image.at(x, y, c) = row[std::size_t(x) * 3 + c];
      } else {
        for (int c = 0; c < 3; ++c) image.at(x, y, c) = row[std::size_t(x)];
      }
    }
  }
  return image;
}

Image load_image(const std::string& path) {
  if (has_suffix(path, ".png")) return load_png(path);
  if (has_suffix(path, ".pfm")) return load_pfm(path);
  fail("unsupported image extension", path);
}

}  // namespace absplat
