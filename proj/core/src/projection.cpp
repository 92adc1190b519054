#include "absplat/projection.hpp"

#include "absplat/parallel.hpp"
#include "absplat/sh.hpp"

#include <cmath>

namespace absplat {

namespace {

constexpr Scalar kMinBlendAlpha = 1.0 / 255.0;

Mat2 invert_spd2(const Mat2& m) {
  const Scalar det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
  Mat2 inv;
  inv << m(1, 1) / det, -m(0, 1) / det, -m(1, 0) / det, m(0, 0) / det;
  return inv;
}

bool footprint_hits_image(const Vec2& mean, Scalar radius, int width, int height) {
  return mean.x() + radius >= 0.0 && mean.x() - radius <= Scalar(width) &&
         mean.y() + radius >= 0.0 && mean.y() - radius <= Scalar(height);
}

std::vector<ProjectedGaussian> compact(std::vector<ProjectedGaussian>&& slots,
                                       const std::vector<std::uint8_t>& keep) {
  std::vector<ProjectedGaussian> out;
  std::size_t n = 0;
  for (auto k : keep) n += k;
  out.reserve(n);
  for (std::size_t i = 0; i < slots.size(); ++i)
    if (keep[i]) out.push_back(slots[i]);
  return out;
}

}  // namespace

Scalar footprint_radius(const Mat2& cov2d, Scalar opacity) {
  if (opacity <= kMinBlendAlpha) return 0.0;
  const Scalar mid = 0.5 * (cov2d(0, 0) + cov2d(1, 1));
  const Scalar half_diff = 0.5 * (cov2d(0, 0) - cov2d(1, 1));
  const Scalar disc = std::sqrt(half_diff * half_diff + cov2d(0, 1) * cov2d(0, 1));
  const Scalar lambda_max = mid + disc;
  if (lambda_max <= 0.0) return 0.0;
  // alpha = opacity * exp(-q/2) drops below 1/255 at q = 2 ln(255 * opacity);
  // widen beyond 3 sigma for near-opaque Gaussians so the cutoff stays inside
  // the footprint.
  const Scalar q_cut = 2.0 * std::log(255.0 * opacity);
  const Scalar sigmas = std::max(3.0, std::sqrt(std::max(q_cut, 0.0)));
  return sigmas * std::sqrt(lambda_max);
}

std::vector<ProjectedGaussian> project(const GaussianCloud& cloud, const Camera& camera,
                                       const ProjectOptions& options) {
  const std::size_t n = cloud.size();
  std::vector<ProjectedGaussian> slots(n);
  std::vector<std::uint8_t> keep(n, 0);

  const Mat3 w_rot = camera.rotation();
  const Vec3 w_trans = camera.translation();
  const Vec3 cam_center = camera.center();

  parallel_for(n, options.threads, [&](std::size_t i) {
    const Vec3 t = w_rot * cloud.positions[i] + w_trans;
    if (t.z() <= camera.near) return;

    const Scalar inv_z = 1.0 / t.z();
    const Vec2 mean2d(camera.fx * t.x() * inv_z + camera.cx,
                      camera.fy * t.y() * inv_z + camera.cy);

    // Local affine (EWA) approximation of the perspective map at the mean.
    Eigen::Matrix<Scalar, 2, 3> jac;
    jac << camera.fx * inv_z, 0, -camera.fx * t.x() * inv_z * inv_z,
        0, camera.fy * inv_z, -camera.fy * t.y() * inv_z * inv_z;

    const Mat3 cov_cam = w_rot * covariance3d(cloud, i) * w_rot.transpose();
    Mat2 cov2d = jac * cov_cam * jac.transpose();
    cov2d(0, 0) += options.lowpass;
    cov2d(1, 1) += options.lowpass;

    const Scalar opacity = sigmoid(cloud.opacity_logits[i]);
    const Scalar radius = footprint_radius(cov2d, opacity);
    if (radius <= 0.0 || !footprint_hits_image(mean2d, radius, camera.width, camera.height))
      return;

    Vec3 dir = cloud.positions[i] - cam_center;
    const Scalar dn = dir.norm();
    dir = dn > 1e-12 ? Vec3(dir / dn) : Vec3(0, 0, 1);

    ProjectedGaussian& p = slots[i];
    p.mean2d = mean2d;
    const Mat2 conic = invert_spd2(cov2d);
    p.conic_a = conic(0, 0);
    p.conic_b = conic(0, 1);
    p.conic_c = conic(1, 1);
    p.depth = t.z();
    p.rgb = eval_color(cloud.coeffs(i), dir, cloud.sh_degree);
    p.opacity = opacity;
    p.radius = radius;
    p.source = GaussianId(i);
    keep[i] = 1;
  });

  return compact(std::move(slots), keep);
}

std::vector<ProjectedGaussian> project_identity(const GaussianCloud& cloud, int width,
                                                int height, const ProjectOptions& options) {
  const std::size_t n = cloud.size();
  std::vector<ProjectedGaussian> slots(n);
  std::vector<std::uint8_t> keep(n, 0);
  const Vec3 canonical_dir(0, 0, 1);

  parallel_for(n, options.threads, [&](std::size_t i) {
    const Vec2 mean2d(cloud.positions[i].x(), cloud.positions[i].y());
    Mat2 cov2d = covariance3d(cloud, i).topLeftCorner<2, 2>();
    cov2d(0, 0) += options.lowpass;
    cov2d(1, 1) += options.lowpass;

    const Scalar opacity = sigmoid(cloud.opacity_logits[i]);
    const Scalar radius = footprint_radius(cov2d, opacity);
    if (radius <= 0.0 || !footprint_hits_image(mean2d, radius, width, height)) return;

    ProjectedGaussian& p = slots[i];
    p.mean2d = mean2d;
    const Mat2 conic = invert_spd2(cov2d);
    p.conic_a = conic(0, 0);
    p.conic_b = conic(0, 1);
    p.conic_c = conic(1, 1);
    p.depth = cloud.positions[i].z();
    p.rgb = eval_color(cloud.coeffs(i), canonical_dir, cloud.sh_degree);
    p.opacity = opacity;
    p.radius = radius;
    p.source = GaussianId(i);
    keep[i] = 1;
  });

  return compact(std::move(slots), keep);
}

}  // namespace absplat
