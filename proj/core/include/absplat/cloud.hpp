#pragma once

#include "absplat/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace absplat {

// Per-Gaussian densification statistics, reset at every densify step.
// signed_accum / homodir_accum hold running sums over views of the per-view
// 2-norms of the signed and homodirectional view-space positional gradients;
// view_count is the number of views the Gaussian was blended in since the
// last reset.
struct GradientLedger {
  std::vector<Scalar> signed_accum;
  std::vector<Scalar> homodir_accum;
  std::vector<int> view_count;
  std::vector<Scalar> max_screen_radius;

  void resize(std::size_t n);
  void reset();
  std::size_t size() const { return signed_accum.size(); }
};

// The learnable scene. Covariance is factored as R(q) diag(exp(s))^2 R(q)^T,
// which keeps it positive definite under unconstrained optimization; opacity
// is pre-sigmoid for the same reason.
struct GaussianCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> log_scales;
  std::vector<Vec4> rotations;  // quaternion (w, x, y, z), unit norm after each step
  std::vector<Scalar> opacity_logits;
  std::vector<Scalar> color_coeffs;  // N * 3*(degree+1)^2, coefficient-major
  int sh_degree = 0;
  GradientLedger ledger;

  std::size_t size() const { return positions.size(); }
  int coeffs_per_gaussian() const { return 3 * (sh_degree + 1) * (sh_degree + 1); }

  std::span<const Scalar> coeffs(std::size_t i) const {
    const std::size_t k = std::size_t(coeffs_per_gaussian());
    return {color_coeffs.data() + i * k, k};
  }
  std::span<Scalar> coeffs(std::size_t i) {
    const std::size_t k = std::size_t(coeffs_per_gaussian());
    return {color_coeffs.data() + i * k, k};
  }

  void resize(std::size_t n);
  void reset_ledger() { ledger.reset(); }

  // Largest covariance axis in world units, exp(max log-scale).
  Scalar max_scale(std::size_t i) const;

  // Checks array-length agreement, finite positive scales, unit quaternions.
  void validate() const;
};

// Rotation matrix of a quaternion (normalized internally, so the result is
// invariant to q -> -q and well defined for any nonzero q).
Mat3 quat_to_rotation(const Vec4& q);

// R S S^T R^T with S = diag(exp(log_scales)); symmetric positive definite.
Mat3 covariance3d(const GaussianCloud& cloud, std::size_t index);

// Chain rule companion: given dL/dSigma (full symmetric matrix), accumulates
// gradients onto the stored quaternion and log-scales.
void covariance3d_backward(const Vec4& q, const Vec3& log_scales, const Mat3& d_sigma,
                           Vec4& d_q, Vec3& d_log_scales);

}  // namespace absplat
