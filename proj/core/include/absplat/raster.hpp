#pragma once

#include "absplat/image.hpp"
#include "absplat/projection.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace absplat {

struct RenderOptions {
  Vec3 background = Vec3::Zero();
  int tile_size = 16;
  Scalar alpha_clamp = 0.99;
  Scalar alpha_skip = 1.0 / 255.0;
  Scalar min_transmittance = 1e-4;  // stop before T would drop below this
  int threads = 1;                  // results are identical for any value
};

// Forward-pass byproducts needed to replay blending in the backward pass.
struct RenderArtifacts {
  int width = 0, height = 0;
  int tile_size = 16, tiles_x = 0, tiles_y = 0;
  std::size_t n_projected = 0;

  // Per-tile contiguous [begin, end) spans into `contributors`.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> tile_ranges;
  // Depth-sorted (per tile, gaussian-id tie-break) indices into the
  // projected list.
  std::vector<std::uint32_t> contributors;

  std::vector<Scalar> final_transmittance;   // per pixel
  std::vector<std::uint32_t> contributor_count;  // per pixel, # blended
  std::vector<Scalar> weight_sum;            // per pixel, sum of blend weights
};

// Tile-based front-to-back alpha blending. Throws "empty viewport" on a
// zero-area image.
Image render(std::span<const ProjectedGaussian> projected, int width, int height,
             const RenderOptions& options = {}, RenderArtifacts* artifacts = nullptr);

struct NaiveStats {
  std::vector<Scalar> final_transmittance;
  std::vector<Scalar> weight_sum;
  std::vector<std::uint32_t> contributor_count;
};

// Reference renderer: per pixel, iterates the full depth-sorted global list
// with the same blending rules but no tiling. Oracle for `render`.
Image render_naive(std::span<const ProjectedGaussian> projected, int width, int height,
                   const RenderOptions& options = {}, NaiveStats* stats = nullptr);

// Global blending order: ascending depth, gaussian-id tie-break.
std::vector<std::uint32_t> blend_order(std::span<const ProjectedGaussian> projected);

}  // namespace absplat
