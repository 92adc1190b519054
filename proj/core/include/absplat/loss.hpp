#pragma once

#include "absplat/image.hpp"

namespace absplat {

struct LossResult {
  Scalar value = 0.0;
  Image grad;  // dL/d(rendered), per pixel per channel
};

// (1 - lambda) * mean-L1 + lambda * (1 - SSIM)/2, with its per-pixel
// gradient. Throws on dimension mismatch.
LossResult loss(const Image& rendered, const Image& target, Scalar lambda_dssim);

}  // namespace absplat
