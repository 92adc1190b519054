#pragma once

#include "absplat/cloud.hpp"
#include "absplat/raster.hpp"

#include <optional>

namespace absplat {

// Gradients of a scalar loss for one rendered view. signed_view2d is the
// per-Gaussian sum of per-pixel view-space positional sub-gradients;
// homodir_view2d sums their componentwise absolute values instead, so
// opposing sub-gradients cannot cancel. The homodirectional accumulator
// feeds only densification, never the optimizer.
struct ViewGradients {
  std::vector<Vec3> d_positions;
  std::vector<Vec3> d_log_scales;
  std::vector<Vec4> d_rotations;
  std::vector<Scalar> d_opacity_logits;
  std::vector<Scalar> d_color_coeffs;

  std::vector<Vec2> signed_view2d;
  std::vector<Vec2> homodir_view2d;
  std::vector<std::uint32_t> pixel_count;  // blended pixels this view
  std::vector<Scalar> screen_radius;       // footprint radius this view, px
  std::vector<std::uint8_t> touched;       // blended into >= 1 pixel

  void resize(const GaussianCloud& cloud);
};

struct BackwardOptions {
  int threads = 1;
  // Stricter variant: accumulate |per-channel sub-gradient| instead of the
  // absolute value of the channel-summed sub-gradient.
  bool homodir_per_channel = false;
};

// Analytic backward through blending and EWA projection. `image_grad` holds
// dL/d(rendered pixel) per channel. `render_options` must match the forward
// call that produced `artifacts`; a size mismatch throws "stale artifacts".
ViewGradients backward(const GaussianCloud& cloud,
                       std::span<const ProjectedGaussian> projected,
                       const RenderArtifacts& artifacts, const Image& image_grad,
                       const Camera& camera, const RenderOptions& render_options = {},
                       const BackwardOptions& options = {});

// Identity-projection variant for pure 2D fits.
ViewGradients backward_identity(const GaussianCloud& cloud,
                                std::span<const ProjectedGaussian> projected,
                                const RenderArtifacts& artifacts, const Image& image_grad,
                                const RenderOptions& render_options = {},
                                const BackwardOptions& options = {});

// Dense per-pixel signed sub-gradient field of one Gaussian's view-space
// position; zero outside its footprint.
struct PixelGradientMap {
  int width = 0, height = 0;
  std::vector<Scalar> gx, gy;  // per pixel, row-major

  Vec2 sum() const;
  Vec2 abs_sum() const;
};

// Throws "gaussian not in view" when `target` was culled from this view.
PixelGradientMap capture_pixel_gradients(std::span<const ProjectedGaussian> projected,
                                         const RenderArtifacts& artifacts,
                                         const Image& image_grad, GaussianId target,
                                         const RenderOptions& render_options = {});

// Folds one view's gradients into the cloud's densification ledger:
// accumulates per-view gradient norms, bumps the view count, and tracks the
// largest observed screen radius for touched Gaussians.
void accumulate_ledger(GaussianCloud& cloud, const ViewGradients& grads);

// Red = positive, green = negative, intensity proportional to |value|
// normalized per image.
void save_sign_map(const std::vector<Scalar>& values, int width, int height,
                   const std::string& path);

}  // namespace absplat
