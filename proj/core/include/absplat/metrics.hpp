#pragma once

#include "absplat/image.hpp"

namespace absplat {

// 10*log10(1/MSE) over all channels; +infinity for identical images.
Scalar psnr(const Image& a, const Image& b);

// Mean local SSIM, 11x11 Gaussian window sigma=1.5, K1=0.01, K2=0.03,
// dynamic range 1, valid-region windows only, averaged over channels.
// Throws if the images are smaller than the window.
Scalar ssim(const Image& a, const Image& b);

// SSIM plus its gradient with respect to `a`.
Scalar ssim_with_grad(const Image& a, const Image& b, Image& d_a);

}  // namespace absplat
