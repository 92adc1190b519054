#include "absplat/sh.hpp"

#include <cassert>

namespace absplat {

namespace {

constexpr Scalar kC0 = 0.28209479177387814;
constexpr Scalar kC1 = 0.4886025119029199;
constexpr Scalar kC2[5] = {1.0925484305920792, -1.0925484305920792, 0.31539156525252005,
                           -1.0925484305920792, 0.5462742152960396};
constexpr Scalar kC3[7] = {-0.5900435899266435, 2.890611442640554,  -0.4570457994644658,
                           0.3731763325901154,  -0.4570457994644658, 1.445305721320277,
                           -0.5900435899266435};

}  // namespace

void sh_basis(const Vec3& dir, int degree, Scalar* out) {
  assert(degree >= 0 && degree <= kMaxShDegree);
  const Scalar x = dir.x(), y = dir.y(), z = dir.z();
  out[0] = kC0;
  if (degree < 1) return;
  out[1] = -kC1 * y;
  out[2] = kC1 * z;
  out[3] = -kC1 * x;
  if (degree < 2) return;
  const Scalar xx = x * x, yy = y * y, zz = z * z;
  const Scalar xy = x * y, yz = y * z, xz = x * z;
  out[4] = kC2[0] * xy;
  out[5] = kC2[1] * yz;
  out[6] = kC2[2] * (2.0 * zz - xx - yy);
  out[7] = kC2[3] * xz;
  out[8] = kC2[4] * (xx - yy);
  if (degree < 3) return;
  out[9] = kC3[0] * y * (3.0 * xx - yy);
  out[10] = kC3[1] * xy * z;
  out[11] = kC3[2] * y * (4.0 * zz - xx - yy);
  out[12] = kC3[3] * z * (2.0 * zz - 3.0 * xx - 3.0 * yy);
  out[13] = kC3[4] * x * (4.0 * zz - xx - yy);
  out[14] = kC3[5] * z * (xx - yy);
  out[15] = kC3[6] * x * (xx - 3.0 * yy);
}

void sh_basis_dir_grad(const Vec3& dir, int degree, Vec3* out) {
  assert(degree >= 0 && degree <= kMaxShDegree);
  const Scalar x = dir.x(), y = dir.y(), z = dir.z();
  out[0] = Vec3::Zero();
  if (degree < 1) return;
  out[1] = Vec3(0, -kC1, 0);
  out[2] = Vec3(0, 0, kC1);
  out[3] = Vec3(-kC1, 0, 0);
  if (degree < 2) return;
  out[4] = kC2[0] * Vec3(y, x, 0);
  out[5] = kC2[1] * Vec3(0, z, y);
  out[6] = kC2[2] * Vec3(-2.0 * x, -2.0 * y, 4.0 * z);
  out[7] = kC2[3] * Vec3(z, 0, x);
  out[8] = kC2[4] * Vec3(2.0 * x, -2.0 * y, 0);
  if (degree < 3) return;
  const Scalar xx = x * x, yy = y * y, zz = z * z;
  out[9] = kC3[0] * Vec3(6.0 * x * y, 3.0 * xx - 3.0 * yy, 0);
  out[10] = kC3[1] * Vec3(y * z, x * z, x * y);
  out[11] = kC3[2] * Vec3(-2.0 * x * y, 4.0 * zz - xx - 3.0 * yy, 8.0 * y * z);
  out[12] = kC3[3] * Vec3(-6.0 * x * z, -6.0 * y * z, 6.0 * zz - 3.0 * xx - 3.0 * yy);
  out[13] = kC3[4] * Vec3(4.0 * zz - 3.0 * xx - yy, -2.0 * x * y, 8.0 * x * z);
  out[14] = kC3[5] * Vec3(2.0 * x * z, -2.0 * y * z, xx - yy);
  out[15] = kC3[6] * Vec3(3.0 * xx - 3.0 * yy, -6.0 * x * y, 0);
}

Vec3 eval_color(std::span<const Scalar> coeffs, const Vec3& view_dir, int degree) {
  const int K = sh_basis_count(degree);
  assert(coeffs.size() == std::size_t(K) * 3);
  Scalar basis[16];
  sh_basis(view_dir, degree, basis);
  Vec3 rgb = Vec3::Zero();
  for (int k = 0; k < K; ++k) {
    rgb[0] += basis[k] * coeffs[std::size_t(k) * 3 + 0];
    rgb[1] += basis[k] * coeffs[std::size_t(k) * 3 + 1];
    rgb[2] += basis[k] * coeffs[std::size_t(k) * 3 + 2];
  }
  rgb.array() += 0.5;
  return rgb.cwiseMax(0.0);
}

Vec3 eval_color_backward(std::span<const Scalar> coeffs, const Vec3& view_dir, int degree,
                         const Vec3& d_color, std::span<Scalar> d_coeffs) {
  const int K = sh_basis_count(degree);
  assert(coeffs.size() == std::size_t(K) * 3 && d_coeffs.size() == coeffs.size());
  Scalar basis[16];
  Vec3 basis_grad[16];
  sh_basis(view_dir, degree, basis);
  sh_basis_dir_grad(view_dir, degree, basis_grad);

  // Recompute the pre-clamp value per channel to gate the clamp.
  Vec3 raw = Vec3::Constant(0.5);
  for (int k = 0; k < K; ++k)
    for (int c = 0; c < 3; ++c) raw[c] += basis[k] * coeffs[std::size_t(k) * 3 + c];

  Vec3 d_dir = Vec3::Zero();
  for (int c = 0; c < 3; ++c) {
    if (raw[c] < 0.0) continue;  // clamped channel: gradient blocked
    const Scalar g = d_color[c];
    if (g == 0.0) continue;
    for (int k = 0; k < K; ++k) {
      d_coeffs[std::size_t(k) * 3 + c] += g * basis[k];
      d_dir += g * coeffs[std::size_t(k) * 3 + c] * basis_grad[k];
    }
  }
  return d_dir;
}

}  // namespace absplat
