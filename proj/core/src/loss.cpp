#include "absplat/loss.hpp"

#include "absplat/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace absplat {

LossResult loss(const Image& rendered, const Image& target, Scalar lambda_dssim) {
  if (!rendered.same_size(target)) throw std::invalid_argument("image dimension mismatch");
  if (rendered.empty()) throw std::invalid_argument("empty image");

  LossResult result;
  result.grad = Image(rendered.width(), rendered.height());

  const std::size_t n = rendered.data().size();
  const Scalar inv_n = 1.0 / Scalar(n);
  Scalar l1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar d = rendered.data()[i] - target.data()[i];
    l1 += std::abs(d);
    result.grad.data()[i] = (d > 0 ? 1.0 : d < 0 ? -1.0 : 0.0) * inv_n * (1.0 - lambda_dssim);
  }
  result.value = (1.0 - lambda_dssim) * l1 * inv_n;

  if (lambda_dssim > 0.0) {
    Image d_ssim;
    const Scalar s = ssim_with_grad(rendered, target, d_ssim);
    result.value += lambda_dssim * (1.0 - s) * 0.5;
    const Scalar scale = -0.5 * lambda_dssim;
    for (std::size_t i = 0; i < n; ++i) result.grad.data()[i] += scale * d_ssim.data()[i];
  }
  return result;
}

}  // namespace absplat
