#pragma once

#include "absplat/camera.hpp"
#include "absplat/cloud.hpp"
#include "absplat/image.hpp"

#include <vector>

namespace absplat {

// One centered Gaussian sized to a quarter of the image's long side, colored
// with the image mean: the single-primitive fit setup.
GaussianCloud init_single_gaussian(const Image& target);

// Stratified grid of means over the image; isotropic scale = 2x cell size,
// opacity logit 0, color = local mean pixel.
GaussianCloud init_image_grid(const Image& target, int count);

// Uniform random positions in a box around the camera centroid, gray color,
// opacity 0.1, isotropic scale = scale_frac x extent. Deterministic in seed.
GaussianCloud init_random_3d(const std::vector<Camera>& cameras, std::size_t count,
                             std::uint64_t seed, Scalar scale_frac = 0.02,
                             int sh_degree = 0);

}  // namespace absplat
