#pragma once

#include "absplat/types.hpp"

#include <string>
#include <vector>

namespace absplat {

// Dense row-major RGB image, linear values, [0,1] nominal range.
class Image {
 public:
  Image() = default;
  Image(int width, int height, const Vec3& fill = Vec3::Zero());

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const { return std::size_t(width_) * height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Scalar& at(int x, int y, int c) { return data_[(std::size_t(y) * width_ + x) * 3 + c]; }
  Scalar at(int x, int y, int c) const { return data_[(std::size_t(y) * width_ + x) * 3 + c]; }

  Vec3 pixel(int x, int y) const {
    const Scalar* p = &data_[(std::size_t(y) * width_ + x) * 3];
    return Vec3(p[0], p[1], p[2]);
  }
  void set_pixel(int x, int y, const Vec3& v) {
    Scalar* p = &data_[(std::size_t(y) * width_ + x) * 3];
    p[0] = v[0];
    p[1] = v[1];
    p[2] = v[2];
  }

  std::vector<Scalar>& data() { return data_; }
  const std::vector<Scalar>& data() const { return data_; }

  bool same_size(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<Scalar> data_;
};

// 8-bit PNG, values clamped to [0,1] and rounded on write; loads gray and
// gray-alpha files by channel replication.
Image load_png(const std::string& path);
void save_png(const Image& image, const std::string& path);

// 32-bit float PFM (little-endian, bottom-up rows per convention).
Image load_pfm(const std::string& path);
void save_pfm(const Image& image, const std::string& path);

// Single-channel PFM ("Pf") used for gradient-map exports.
void save_pfm_gray(const std::vector<Scalar>& values, int width, int height,
                   const std::string& path);

// Loads by extension: .png or .pfm.
Image load_image(const std::string& path);

}  // namespace absplat
