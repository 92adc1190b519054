#include "absplat/backward.hpp"

#include "absplat/parallel.hpp"
#include "absplat/sh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace absplat {

void ViewGradients::resize(const GaussianCloud& cloud) {
  const std::size_t n = cloud.size();
  d_positions.assign(n, Vec3::Zero());
  d_log_scales.assign(n, Vec3::Zero());
  d_rotations.assign(n, Vec4::Zero());
  d_opacity_logits.assign(n, 0.0);
  d_color_coeffs.assign(cloud.color_coeffs.size(), 0.0);
  signed_view2d.assign(n, Vec2::Zero());
  homodir_view2d.assign(n, Vec2::Zero());
  pixel_count.assign(n, 0);
  screen_radius.assign(n, 0.0);
  touched.assign(n, 0);
}

Vec2 PixelGradientMap::sum() const {
  Vec2 s = Vec2::Zero();
  for (std::size_t i = 0; i < gx.size(); ++i) s += Vec2(gx[i], gy[i]);
  return s;
}

Vec2 PixelGradientMap::abs_sum() const {
  Vec2 s = Vec2::Zero();
  for (std::size_t i = 0; i < gx.size(); ++i) s += Vec2(std::abs(gx[i]), std::abs(gy[i]));
  return s;
}

namespace {

// One blended contributor at one pixel, replayed from the forward pass.
struct BlendStep {
  std::uint32_t entry;   // index into artifacts.contributors
  Scalar alpha;          // clamped alpha actually blended
  Scalar transmittance;  // T in front of this contributor
  Scalar gaussian;       // exp(-q/2)
  Scalar dx, dy;         // pixel center minus mean2d
  bool clamped;          // alpha hit the clamp; position/opacity chain blocked
};

// Replays the forward blending sequence of one pixel, division-free: alphas
// and transmittances are recomputed by multiplication in the exact forward
// order, so the replayed weights match the forward pass bitwise.
std::size_t replay_pixel(std::span<const ProjectedGaussian> projected,
                         const RenderArtifacts& art, std::uint32_t begin, std::uint32_t end,
                         Scalar px, Scalar py, const RenderOptions& opt,
                         std::vector<BlendStep>& steps) {
  steps.clear();
  Scalar T = 1.0;
  for (std::uint32_t e = begin; e < end; ++e) {
    const ProjectedGaussian& g = projected[art.contributors[e]];
    const Scalar dx = px - g.mean2d.x();
    const Scalar dy = py - g.mean2d.y();
    const Scalar q = g.conic_a * dx * dx + 2.0 * g.conic_b * dx * dy + g.conic_c * dy * dy;
    if (q < 0.0) continue;
    const Scalar raw_alpha = g.opacity * std::exp(-0.5 * q);
    if (raw_alpha < opt.alpha_skip) continue;
    const Scalar alpha = std::min(raw_alpha, opt.alpha_clamp);
    const Scalar next_T = T * (1.0 - alpha);
    if (next_T < opt.min_transmittance) break;
    steps.push_back({e, alpha, T, std::exp(-0.5 * q), dx, dy, raw_alpha >= opt.alpha_clamp});
    T = next_T;
  }
  return steps.size();
}

// Per-contributor-entry raster gradients (disjoint per tile, reduced in
// fixed entry order afterwards).
struct EntryGrads {
  Vec2 d_mean2d = Vec2::Zero();
  Vec2 homodir = Vec2::Zero();
  Vec3 d_conic = Vec3::Zero();  // (a, b, c); b is the single stored off-diagonal
  Vec3 d_rgb = Vec3::Zero();
  Scalar d_opacity = 0.0;  // dL/d sigmoid(o)
  std::uint32_t pixels = 0;
};

void check_artifacts(std::span<const ProjectedGaussian> projected, const RenderArtifacts& art,
                     const Image& image_grad) {
  if (art.n_projected != projected.size() || image_grad.width() != art.width ||
      image_grad.height() != art.height) {
    throw std::runtime_error("stale artifacts");
  }
}

void raster_phase(std::span<const ProjectedGaussian> projected, const RenderArtifacts& art,
                  const Image& image_grad, const RenderOptions& ropt,
                  const BackwardOptions& opt, std::vector<EntryGrads>& entries) {
  entries.assign(art.contributors.size(), EntryGrads{});
  const std::size_t n_tiles = std::size_t(art.tiles_x) * art.tiles_y;

  parallel_for(n_tiles, opt.threads, [&](std::size_t t) {
    const auto [begin, end] = art.tile_ranges[t];
    if (begin == end) return;
    const int tx = int(t) % art.tiles_x;
    const int ty = int(t) / art.tiles_x;
    const int x0 = tx * art.tile_size, x1 = std::min(art.width, x0 + art.tile_size);
    const int y0 = ty * art.tile_size, y1 = std::min(art.height, y0 + art.tile_size);

    std::vector<BlendStep> steps;
    steps.reserve(end - begin);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        replay_pixel(projected, art, begin, end, x + 0.5, y + 0.5, ropt, steps);
        if (steps.empty()) continue;
        const Vec3 dpix(image_grad.at(x, y, 0), image_grad.at(x, y, 1), image_grad.at(x, y, 2));

        // Back-to-front: rec composites everything behind the current
        // contributor, seeded with the background layer.
        Vec3 rec = ropt.background;
        for (std::size_t s = steps.size(); s-- > 0;) {
          const BlendStep& st = steps[s];
          const ProjectedGaussian& g = projected[art.contributors[st.entry]];
          EntryGrads& eg = entries[st.entry];
          eg.pixels += 1;

          const Scalar w = st.alpha * st.transmittance;
          eg.d_rgb += w * dpix;

          if (!st.clamped) {
            // dL/d alpha = sum_ch dL/dc * T * (c_i - rec)
            const Vec3 diff = g.rgb - rec;
            const Scalar g_alpha = st.transmittance * dpix.dot(diff);

            eg.d_opacity += g_alpha * st.gaussian;

            const Scalar d_G = g_alpha * g.opacity;
            const Scalar half_g = -0.5 * st.gaussian * d_G;
            eg.d_conic += Vec3(half_g * st.dx * st.dx, 2.0 * half_g * st.dx * st.dy,
                               half_g * st.dy * st.dy);

            // d alpha / d mean2d = alpha * Conic * (pixel - mean)
            const Vec2 cd(g.conic_a * st.dx + g.conic_b * st.dy,
                          g.conic_b * st.dx + g.conic_c * st.dy);
            const Vec2 sub = g_alpha * st.alpha * cd;
            eg.d_mean2d += sub;
            if (!opt.homodir_per_channel) {
              eg.homodir += sub.cwiseAbs();
            } else {
              for (int c = 0; c < 3; ++c) {
                const Vec2 sub_c = dpix[c] * st.transmittance * diff[c] * st.alpha * cd;
                eg.homodir += sub_c.cwiseAbs();
              }
            }
          }
          rec = st.alpha * g.rgb + (1.0 - st.alpha) * rec;
        }
      }
    }
  });
}

struct ProjectedGrads {
  Vec2 d_mean2d = Vec2::Zero();
  Vec2 homodir = Vec2::Zero();
  Vec3 d_conic = Vec3::Zero();
  Vec3 d_rgb = Vec3::Zero();
  Scalar d_opacity = 0.0;
  std::uint32_t pixels = 0;
};

// Fixed-order reduction over contributor entries; identical for any worker
// count in the raster phase.
std::vector<ProjectedGrads> reduce_entries(const RenderArtifacts& art,
                                           const std::vector<EntryGrads>& entries,
                                           std::size_t n_projected) {
  std::vector<ProjectedGrads> out(n_projected);
  for (std::size_t e = 0; e < entries.size(); ++e) {
    const EntryGrads& eg = entries[e];
    ProjectedGrads& pg = out[art.contributors[e]];
    pg.d_mean2d += eg.d_mean2d;
    pg.homodir += eg.homodir;
    pg.d_conic += eg.d_conic;
    pg.d_rgb += eg.d_rgb;
    pg.d_opacity += eg.d_opacity;
    pg.pixels += eg.pixels;
  }
  return out;
}

// dL/d cov2d from dL/d conic: C = M^-1 gives dM = -C dC C.
Mat2 conic_to_cov_grad(const ProjectedGaussian& g, const Vec3& d_conic) {
  Mat2 dC;
  dC << d_conic[0], 0.5 * d_conic[1], 0.5 * d_conic[1], d_conic[2];
  const Mat2 C = g.conic();
  return -C * dC * C;
}

ViewGradients backward_impl(const GaussianCloud& cloud,
                            std::span<const ProjectedGaussian> projected,
                            const RenderArtifacts& artifacts, const Image& image_grad,
                            const Camera* camera, const RenderOptions& ropt,
                            const BackwardOptions& opt) {
  check_artifacts(projected, artifacts, image_grad);

  std::vector<EntryGrads> entries;
  raster_phase(projected, artifacts, image_grad, ropt, opt, entries);
  const std::vector<ProjectedGrads> pg = reduce_entries(artifacts, entries, projected.size());

  ViewGradients grads;
  grads.resize(cloud);

  const int coeffs_n = cloud.coeffs_per_gaussian();
  const Vec3 canonical_dir(0, 0, 1);

  parallel_for(projected.size(), opt.threads, [&](std::size_t j) {
    const ProjectedGaussian& g = projected[j];
    const std::size_t i = std::size_t(g.source);
    const ProjectedGrads& a = pg[j];

    grads.signed_view2d[i] = a.d_mean2d;
    grads.homodir_view2d[i] = a.homodir;
    grads.pixel_count[i] = a.pixels;
    grads.screen_radius[i] = g.radius;
    grads.touched[i] = a.pixels > 0;

    // Color chain into SH coefficients (and view direction in 3D mode).
    Vec3 dir = canonical_dir;
    Scalar dir_norm = 1.0;
    if (camera) {
      const Vec3 rel = cloud.positions[i] - camera->center();
      dir_norm = rel.norm();
      if (dir_norm > 1e-12) dir = rel / dir_norm;
    }
    std::span<Scalar> d_coeffs{grads.d_color_coeffs.data() + i * std::size_t(coeffs_n),
                               std::size_t(coeffs_n)};
    const Vec3 d_dir =
        eval_color_backward(cloud.coeffs(i), dir, cloud.sh_degree, a.d_rgb, d_coeffs);

    grads.d_opacity_logits[i] = a.d_opacity * g.opacity * (1.0 - g.opacity);

    const Mat2 d_cov2d = conic_to_cov_grad(g, a.d_conic);

    if (!camera) {
      // Identity projection: cov2d is the xy block of the 3D covariance and
      // mean2d is position.xy directly.
      Mat3 d_sigma = Mat3::Zero();
      d_sigma.topLeftCorner<2, 2>() = d_cov2d;
      covariance3d_backward(cloud.rotations[i], cloud.log_scales[i], d_sigma,
                            grads.d_rotations[i], grads.d_log_scales[i]);
      grads.d_positions[i].head<2>() += a.d_mean2d;
      return;
    }

    const Mat3 w_rot = camera->rotation();
    const Vec3 t = w_rot * cloud.positions[i] + camera->translation();
    const Scalar inv_z = 1.0 / t.z();
    Eigen::Matrix<Scalar, 2, 3> jac;
    jac << camera->fx * inv_z, 0, -camera->fx * t.x() * inv_z * inv_z,
        0, camera->fy * inv_z, -camera->fy * t.y() * inv_z * inv_z;

    const Mat3 sigma_cam = w_rot * covariance3d(cloud, i) * w_rot.transpose();

    // cov2d = J V J^T: gradient w.r.t. V and w.r.t. J itself.
    const Mat3 d_sigma_cam = jac.transpose() * d_cov2d * jac;
    covariance3d_backward(cloud.rotations[i], cloud.log_scales[i],
                          w_rot.transpose() * d_sigma_cam * w_rot, grads.d_rotations[i],
                          grads.d_log_scales[i]);

    const Eigen::Matrix<Scalar, 2, 3> d_jac = 2.0 * d_cov2d * jac * sigma_cam;

    // Camera-space gradient: projected mean plus the Jacobian's own
    // dependence on the camera-space point.
    Vec3 d_t = jac.transpose() * a.d_mean2d;
    const Scalar inv_z2 = inv_z * inv_z;
    const Scalar inv_z3 = inv_z2 * inv_z;
    d_t.x() += d_jac(0, 2) * (-camera->fx * inv_z2);
    d_t.y() += d_jac(1, 2) * (-camera->fy * inv_z2);
    d_t.z() += d_jac(0, 0) * (-camera->fx * inv_z2) + d_jac(1, 1) * (-camera->fy * inv_z2) +
               d_jac(0, 2) * (2.0 * camera->fx * t.x() * inv_z3) +
               d_jac(1, 2) * (2.0 * camera->fy * t.y() * inv_z3);

    grads.d_positions[i] += w_rot.transpose() * d_t;

    if (d_dir != Vec3::Zero() && dir_norm > 1e-12) {
      grads.d_positions[i] += (d_dir - dir * dir.dot(d_dir)) / dir_norm;
    }
  });

  return grads;
}

}  // namespace

ViewGradients backward(const GaussianCloud& cloud, std::span<const ProjectedGaussian> projected,
                       const RenderArtifacts& artifacts, const Image& image_grad,
                       const Camera& camera, const RenderOptions& render_options,
                       const BackwardOptions& options) {
  return backward_impl(cloud, projected, artifacts, image_grad, &camera, render_options,
                       options);
}

ViewGradients backward_identity(const GaussianCloud& cloud,
                                std::span<const ProjectedGaussian> projected,
                                const RenderArtifacts& artifacts, const Image& image_grad,
                                const RenderOptions& render_options,
                                const BackwardOptions& options) {
  return backward_impl(cloud, projected, artifacts, image_grad, nullptr, render_options,
                       options);
}

PixelGradientMap capture_pixel_gradients(std::span<const ProjectedGaussian> projected,
                                         const RenderArtifacts& artifacts,
                                         const Image& image_grad, GaussianId target,
                                         const RenderOptions& ropt) {
  check_artifacts(projected, artifacts, image_grad);

  std::uint32_t target_j = std::uint32_t(-1);
  for (std::size_t j = 0; j < projected.size(); ++j) {
    if (projected[j].source == target) {
      target_j = std::uint32_t(j);
      break;
    }
  }
  if (target_j == std::uint32_t(-1)) throw std::runtime_error("gaussian not in view");

  PixelGradientMap map;
  map.width = artifacts.width;
  map.height = artifacts.height;
  map.gx.assign(std::size_t(artifacts.width) * artifacts.height, 0.0);
  map.gy.assign(map.gx.size(), 0.0);

  const std::size_t n_tiles = std::size_t(artifacts.tiles_x) * artifacts.tiles_y;
  std::vector<BlendStep> steps;
  for (std::size_t t = 0; t < n_tiles; ++t) {
    const auto [begin, end] = artifacts.tile_ranges[t];
    bool has_target = false;
    for (std::uint32_t e = begin; e < end && !has_target; ++e)
      has_target = artifacts.contributors[e] == target_j;
    if (!has_target) continue;

    const int tx = int(t) % artifacts.tiles_x;
    const int ty = int(t) / artifacts.tiles_x;
    const int x0 = tx * artifacts.tile_size;
    const int x1 = std::min(artifacts.width, x0 + artifacts.tile_size);
    const int y0 = ty * artifacts.tile_size;
    const int y1 = std::min(artifacts.height, y0 + artifacts.tile_size);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        replay_pixel(projected, artifacts, begin, end, x + 0.5, y + 0.5, ropt, steps);
        if (steps.empty()) continue;
        const Vec3 dpix(image_grad.at(x, y, 0), image_grad.at(x, y, 1), image_grad.at(x, y, 2));
        Vec3 rec = ropt.background;
        for (std::size_t s = steps.size(); s-- > 0;) {
          const BlendStep& st = steps[s];
          const ProjectedGaussian& g = projected[artifacts.contributors[st.entry]];
          if (artifacts.contributors[st.entry] == target_j && !st.clamped) {
            const Scalar g_alpha = st.transmittance * dpix.dot(g.rgb - rec);
            const Vec2 cd(g.conic_a * st.dx + g.conic_b * st.dy,
                          g.conic_b * st.dx + g.conic_c * st.dy);
            const Vec2 sub = g_alpha * st.alpha * cd;
            const std::size_t pix = std::size_t(y) * artifacts.width + x;
            map.gx[pix] = sub.x();
            map.gy[pix] = sub.y();
          }
          rec = st.alpha * g.rgb + (1.0 - st.alpha) * rec;
        }
      }
    }
  }
  return map;
}

void accumulate_ledger(GaussianCloud& cloud, const ViewGradients& grads) {
  const std::size_t n = cloud.size();
  if (grads.touched.size() != n) throw std::runtime_error("stale gradients");
  for (std::size_t i = 0; i < n; ++i) {
    if (!grads.touched[i]) continue;
    cloud.ledger.signed_accum[i] += grads.signed_view2d[i].norm();
    cloud.ledger.homodir_accum[i] += grads.homodir_view2d[i].norm();
    cloud.ledger.view_count[i] += 1;
    cloud.ledger.max_screen_radius[i] =
        std::max(cloud.ledger.max_screen_radius[i], grads.screen_radius[i]);
  }
}

void save_sign_map(const std::vector<Scalar>& values, int width, int height,
                   const std::string& path) {
  Scalar peak = 0.0;
  for (Scalar v : values) peak = std::max(peak, std::abs(v));
  Image img(width, height);
  if (peak > 0.0) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const Scalar v = values[std::size_t(y) * width + x] / peak;
        if (v > 0)
          img.set_pixel(x, y, Vec3(v, 0, 0));
        else
          img.set_pixel(x, y, Vec3(0, -v, 0));
      }
    }
  }
  save_png(img, path);
}

}  // namespace absplat
