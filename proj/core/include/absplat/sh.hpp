#pragma once

#include "absplat/types.hpp"

#include <span>

namespace absplat {

inline constexpr int kMaxShDegree = 3;

inline constexpr int sh_basis_count(int degree) { return (degree + 1) * (degree + 1); }

// Real SH basis values at a unit direction, lowest band first. `out` must
// hold sh_basis_count(degree) entries.
void sh_basis(const Vec3& dir, int degree, Scalar* out);

// d basis_k / d dir for the raw (unnormalized-input treated as unit) basis
// polynomials.
void sh_basis_dir_grad(const Vec3& dir, int degree, Vec3* out);

// Decodes a color from per-Gaussian coefficients (layout: coefficient-major,
// 3 channels per coefficient). Applies the +0.5 offset and clamps at 0.
Vec3 eval_color(std::span<const Scalar> coeffs, const Vec3& view_dir, int degree);

// Backward companion of eval_color. Accumulates dL/dcoeffs (same layout as
// coeffs) and returns dL/ddir. The clamp at 0 gates both paths.
Vec3 eval_color_backward(std::span<const Scalar> coeffs, const Vec3& view_dir, int degree,
                         const Vec3& d_color, std::span<Scalar> d_coeffs);

}  // namespace absplat
