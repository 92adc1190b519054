#include "absplat/cloud.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace absplat {

void GradientLedger::resize(std::size_t n) {
  signed_accum.assign(n, 0.0);
  homodir_accum.assign(n, 0.0);
  view_count.assign(n, 0);
  max_screen_radius.assign(n, 0.0);
}

void GradientLedger::reset() {
  std::fill(signed_accum.begin(), signed_accum.end(), 0.0);
  std::fill(homodir_accum.begin(), homodir_accum.end(), 0.0);
  std::fill(view_count.begin(), view_count.end(), 0);
  std::fill(max_screen_radius.begin(), max_screen_radius.end(), 0.0);
}

void GaussianCloud::resize(std::size_t n) {
  positions.resize(n, Vec3::Zero());
  log_scales.resize(n, Vec3::Zero());
  rotations.resize(n, Vec4(1, 0, 0, 0));
  opacity_logits.resize(n, 0.0);
  color_coeffs.resize(n * std::size_t(coeffs_per_gaussian()), 0.0);
  ledger.resize(n);
}

Scalar GaussianCloud::max_scale(std::size_t i) const {
  return std::exp(log_scales[i].maxCoeff());
}

void GaussianCloud::validate() const {
  const std::size_t n = size();
  if (log_scales.size() != n || rotations.size() != n || opacity_logits.size() != n ||
      color_coeffs.size() != n * std::size_t(coeffs_per_gaussian()) || ledger.size() != n) {
    throw std::runtime_error("inconsistent cloud array lengths");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!log_scales[i].allFinite() || !positions[i].allFinite())
      throw std::runtime_error("non-finite cloud parameters");
    if (std::abs(rotations[i].norm() - 1.0) > 1e-6)
      throw std::runtime_error("non-unit quaternion");
  }
}

Mat3 quat_to_rotation(const Vec4& q) {
  const Vec4 u = q / q.norm();
  const Scalar w = u[0], x = u[1], y = u[2], z = u[3];
  Mat3 r;
  r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 covariance3d(const GaussianCloud& cloud, std::size_t index) {
  const Mat3 r = quat_to_rotation(cloud.rotations[index]);
  const Vec3 s = cloud.log_scales[index].array().exp();
  const Mat3 a = r * s.asDiagonal();
  return a * a.transpose();
}

namespace {

// dR/dq for the unit-quaternion rotation formula above, one 3x3 slab per
// quaternion component (w, x, y, z).
void rotation_quat_jacobian(const Vec4& u, Mat3 dr[4]) {
  const Scalar w = u[0], x = u[1], y = u[2], z = u[3];
  dr[0] << 0, -z, y,
           z, 0, -x,
           -y, x, 0;
  dr[1] << 0, y, z,
           y, -2 * x, -w,
           z, w, -2 * x;
  dr[2] << -2 * y, x, w,
           x, 0, z,
           -w, z, -2 * y;
  dr[3] << -2 * z, -w, x,
           w, -2 * z, y,
           x, y, 0;
  for (int k = 0; k < 4; ++k) dr[k] *= 2.0;
}

}  // namespace

void covariance3d_backward(const Vec4& q, const Vec3& log_scales, const Mat3& d_sigma,
                           Vec4& d_q, Vec3& d_log_scales) {
  const Scalar norm = q.norm();
  const Vec4 u = q / norm;
  const Mat3 r = quat_to_rotation(u);
  const Vec3 s = log_scales.array().exp();
  const Mat3 a = r * s.asDiagonal();

  // Sigma = A A^T, with symmetric upstream gradient.
  const Mat3 d_sym = 0.5 * (d_sigma + d_sigma.transpose());
  const Mat3 d_a = 2.0 * d_sym * a;

  const Mat3 d_r = d_a * s.asDiagonal();
  const Vec3 d_s = (r.transpose() * d_a).diagonal();
  d_log_scales += d_s.cwiseProduct(s);

  Mat3 dr_dq[4];
  rotation_quat_jacobian(u, dr_dq);
  Vec4 d_unit;
  for (int k = 0; k < 4; ++k) d_unit[k] = (d_r.array() * dr_dq[k].array()).sum();

  // Through the normalization q -> q/||q||.
  d_q += (d_unit - u * u.dot(d_unit)) / norm;
}

}  // namespace absplat
