#include "absplat/init.hpp"

#include "absplat/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace absplat {

namespace {

constexpr Scalar kShC0 = 0.28209479177387814;

void set_dc(GaussianCloud& cloud, std::size_t i, const Vec3& rgb) {
  auto coeffs = cloud.coeffs(i);
  for (int c = 0; c < 3; ++c) coeffs[std::size_t(c)] = (rgb[c] - 0.5) / kShC0;
}

}  // namespace

GaussianCloud init_single_gaussian(const Image& target) {
  if (target.empty()) throw std::invalid_argument("empty target image");
  GaussianCloud cloud;
  cloud.sh_degree = 0;
  cloud.resize(1);
  cloud.positions[0] = Vec3(target.width() / 2.0, target.height() / 2.0, 0.0);
  const Scalar s = std::max(target.width(), target.height()) / 4.0;
  cloud.log_scales[0] = Vec3(std::log(s), std::log(s), 0.0);
  cloud.opacity_logits[0] = logit(0.8);
  Vec3 mean = Vec3::Zero();
  for (int y = 0; y < target.height(); ++y)
    for (int x = 0; x < target.width(); ++x) mean += target.pixel(x, y);
  mean /= Scalar(target.pixel_count());
  set_dc(cloud, 0, mean);
  return cloud;
}

GaussianCloud init_image_grid(const Image& target, int count) {
  if (target.empty()) throw std::invalid_argument("empty target image");
  if (count < 1) throw std::invalid_argument("init count must be positive");
  const int w = target.width(), h = target.height();
  const int gx = std::max(1, int(std::ceil(std::sqrt(double(count) * w / h))));
  const int gy = std::max(1, (count + gx - 1) / gx);
  const Scalar cell_w = Scalar(w) / gx, cell_h = Scalar(h) / gy;

  GaussianCloud cloud;
  cloud.sh_degree = 0;
  cloud.resize(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    const int cx = i % gx, cy = i / gx;
    cloud.positions[std::size_t(i)] =
        Vec3((cx + 0.5) * cell_w, (cy + 0.5) * cell_h, 0.0);
    const Scalar s = 2.0 * 0.5 * (cell_w + cell_h);
    cloud.log_scales[std::size_t(i)] = Vec3(std::log(s), std::log(s), 0.0);
    cloud.opacity_logits[std::size_t(i)] = 0.0;

    Vec3 mean = Vec3::Zero();
    int n = 0;
    for (int y = int(cy * cell_h); y < std::min(h, int((cy + 1) * cell_h)); ++y)
      for (int x = int(cx * cell_w); x < std::min(w, int((cx + 1) * cell_w)); ++x, ++n)
        mean += target.pixel(x, y);
    if (n > 0) mean /= Scalar(n);
    set_dc(cloud, std::size_t(i), mean);
  }
  return cloud;
}

GaussianCloud init_random_3d(const std::vector<Camera>& cameras, std::size_t count,
                             std::uint64_t seed, Scalar scale_frac, int sh_degree) {
  if (cameras.empty()) throw std::invalid_argument("random init needs cameras");
  Vec3 centroid = Vec3::Zero();
  for (const auto& cam : cameras) centroid += cam.center();
  centroid /= Scalar(cameras.size());
  Scalar extent = 0.0;
  for (const auto& cam : cameras) extent = std::max(extent, (cam.center() - centroid).norm());
  if (extent < 1e-9) extent = 1.0;

  Rng rng(seed);
  GaussianCloud cloud;
  cloud.sh_degree = sh_degree;
  cloud.resize(count);
  const Scalar half = 0.5 * extent;
  for (std::size_t i = 0; i < count; ++i) {
    cloud.positions[i] = centroid + Vec3(rng.uniform(-half, half), rng.uniform(-half, half),
                                         rng.uniform(-half, half));
    cloud.log_scales[i] = Vec3::Constant(std::log(scale_frac * extent));
    cloud.opacity_logits[i] = logit(0.1);
    set_dc(cloud, i, Vec3::Constant(0.5));
  }
  return cloud;
}

}  // namespace absplat
