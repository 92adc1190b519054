#include "absplat/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace absplat {

Adam::Adam(std::size_t n, int coeffs_per_gaussian, const Hyper& hyper)
    : hyper_(hyper), coeffs_k_(std::size_t(coeffs_per_gaussian)) {
  positions_.m.assign(n * 3, 0.0);
  positions_.v.assign(n * 3, 0.0);
  log_scales_.m.assign(n * 3, 0.0);
  log_scales_.v.assign(n * 3, 0.0);
  rotations_.m.assign(n * 4, 0.0);
  rotations_.v.assign(n * 4, 0.0);
  opacities_.m.assign(n, 0.0);
  opacities_.v.assign(n, 0.0);
  colors_.m.assign(n * coeffs_k_, 0.0);
  colors_.v.assign(n * coeffs_k_, 0.0);
}

void Adam::step_group(Group& g, std::size_t count, const Scalar* grad, Scalar* param,
                      Scalar lr, Scalar bc1, Scalar bc2) {
  for (std::size_t i = 0; i < count; ++i) {
    g.m[i] = hyper_.beta1 * g.m[i] + (1.0 - hyper_.beta1) * grad[i];
    g.v[i] = hyper_.beta2 * g.v[i] + (1.0 - hyper_.beta2) * grad[i] * grad[i];
    const Scalar m_hat = g.m[i] / bc1;
    const Scalar v_hat = g.v[i] / bc2;
    param[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper_.eps);
  }
}

void Adam::step(GaussianCloud& cloud, const ViewGradients& grads, const Lrs& lrs) {
  const std::size_t n = cloud.size();
  if (grads.d_positions.size() != n || positions_.m.size() != n * 3)
    throw std::runtime_error("optimizer state out of sync with cloud");

  ++t_;
  const Scalar bc1 = 1.0 - std::pow(hyper_.beta1, Scalar(t_));
  const Scalar bc2 = 1.0 - std::pow(hyper_.beta2, Scalar(t_));

  step_group(positions_, n * 3, grads.d_positions.data()->data(),
             cloud.positions.data()->data(), lrs.position, bc1, bc2);
  step_group(log_scales_, n * 3, grads.d_log_scales.data()->data(),
             cloud.log_scales.data()->data(), lrs.log_scale, bc1, bc2);
  step_group(rotations_, n * 4, grads.d_rotations.data()->data(),
             cloud.rotations.data()->data(), lrs.rotation, bc1, bc2);
  step_group(opacities_, n, grads.d_opacity_logits.data(), cloud.opacity_logits.data(),
             lrs.opacity, bc1, bc2);
  step_group(colors_, n * coeffs_k_, grads.d_color_coeffs.data(), cloud.color_coeffs.data(),
             lrs.color, bc1, bc2);
}

void Adam::remap(Group& g, std::size_t width, const std::vector<std::int32_t>& source_row) {
  std::vector<Scalar> m(source_row.size() * width, 0.0);
  std::vector<Scalar> v(source_row.size() * width, 0.0);
  for (std::size_t r = 0; r < source_row.size(); ++r) {
    const std::int32_t src = source_row[r];
    if (src < 0) continue;
    for (std::size_t c = 0; c < width; ++c) {
      m[r * width + c] = g.m[std::size_t(src) * width + c];
      v[r * width + c] = g.v[std::size_t(src) * width + c];
    }
  }
  g.m = std::move(m);
  g.v = std::move(v);
}

void Adam::surgery(const std::vector<std::int32_t>& source_row) {
  remap(positions_, 3, source_row);
  remap(log_scales_, 3, source_row);
  remap(rotations_, 4, source_row);
  remap(opacities_, 1, source_row);
  remap(colors_, coeffs_k_, source_row);
}

void Adam::reset_opacity_state() {
  std::fill(opacities_.m.begin(), opacities_.m.end(), 0.0);
  std::fill(opacities_.v.begin(), opacities_.v.end(), 0.0);
}

}  // namespace absplat
