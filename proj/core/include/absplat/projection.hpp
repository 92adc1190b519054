#pragma once

#include "absplat/camera.hpp"
#include "absplat/cloud.hpp"

#include <vector>

namespace absplat {

// Screen-space footprint of one Gaussian in one view. The conic is the
// inverse of the (low-pass dilated) 2D covariance, stored upper-triangular.
struct ProjectedGaussian {
  Vec2 mean2d = Vec2::Zero();   // pixels
  Scalar conic_a = 0, conic_b = 0, conic_c = 0;  // pixels^-2
  Scalar depth = 0;             // camera-space z (identity mode: position z)
  Vec3 rgb = Vec3::Zero();      // decoded color for this view
  Scalar opacity = 0;           // sigmoid(opacity_logit)
  Scalar radius = 0;            // conservative pixel extent, >= 3 sigma
  GaussianId source = -1;

  Mat2 conic() const {
    Mat2 c;
    c << conic_a, conic_b, conic_b, conic_c;
    return c;
  }
};

struct ProjectOptions {
  Scalar lowpass = 0.3;  // px^2 added to the 2D covariance diagonal
  int threads = 1;
};

// Perspective EWA projection with frustum culling. Output preserves
// gaussian-id order; culled Gaussians are absent.
std::vector<ProjectedGaussian> project(const GaussianCloud& cloud, const Camera& camera,
                                       const ProjectOptions& options = {});

// Orthographic identity mode for pure 2D image fitting: mean2d = position.xy,
// 2D covariance = the xy block of the 3D covariance, depth = position.z,
// color decoded at the fixed direction (0, 0, 1).
std::vector<ProjectedGaussian> project_identity(const GaussianCloud& cloud, int width,
                                                int height, const ProjectOptions& options = {});

// Footprint radius such that alpha < 1/255 outside of it; never below
// 3 sigma of the larger eigenvalue.
Scalar footprint_radius(const Mat2& cov2d, Scalar opacity);

}  // namespace absplat
