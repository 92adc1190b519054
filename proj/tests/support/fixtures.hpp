#pragma once

#include "absplat/cloud.hpp"
#include "absplat/image.hpp"
#include "absplat/rng.hpp"
#include "absplat/trainer.hpp"

#include <vector>

namespace absplat::testing {

// Random 2D-regime cloud whose footprints sit inside a width x height
// viewport. Opacities stay below the blend clamp so fixtures remain smooth
// for difference quotients.
GaussianCloud random_cloud_2d(Rng& rng, std::size_t n, int width, int height,
                              int sh_degree = 0);

// Random 3D cloud in a box around the origin.
GaussianCloud random_cloud_3d(Rng& rng, std::size_t n, Scalar box_half = 0.5,
                              int sh_degree = 0);

// Cameras on a horizontal ring, all looking at the origin.
std::vector<Camera> camera_ring(int count, int width, int height, Scalar focal,
                                Scalar distance, Scalar height_offset = 0.4);

// Cameras on a frontal arc (span radians around the -z axis), looking at the
// origin: every view faces the z=0 plane.
std::vector<Camera> camera_arc(int count, int width, int height, Scalar focal,
                               Scalar distance, Scalar span = 1.2,
                               Scalar height_offset = 0.3);

// Photo-like synthetic target: smooth color field, a few edges, bandlimited
// texture. Deterministic in the seed.
Image photo_like_image(int width, int height, std::uint64_t seed);

// Piecewise-constant random color cells: a worst-case high-frequency target.
Image noise_texture(int width, int height, std::uint64_t seed, int cell = 4);

// Single centered Gaussian covering a large fraction of the image (the
// one-primitive over-reconstruction setup).
GaussianCloud single_gaussian_for_image(const Image& target);

// Stratified grid initialization over an image (same rule the CLI uses).
GaussianCloud grid_init_for_image(const Image& target, int count);

// Ground-truth "textured wall": a dense grid of small Gaussians on the z=0
// plane colored by the texture, for synthesizing multi-view targets.
GaussianCloud textured_wall(const Image& texture, int grid, Scalar world_size);

}  // namespace absplat::testing
