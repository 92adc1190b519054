#include "absplat/image.hpp"

namespace absplat {

Image::Image(int width, int height, const Vec3& fill)
    : width_(width), height_(height), data_(std::size_t(width) * height * 3) {
  for (std::size_t i = 0; i < data_.size(); i += 3) {
    data_[i] = fill[0];
    data_[i + 1] = fill[1];
    data_[i + 2] = fill[2];
  }
}

}  // namespace absplat
