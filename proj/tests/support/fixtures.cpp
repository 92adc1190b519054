#include "fixtures.hpp"

#include "absplat/init.hpp"
#include "absplat/sh.hpp"

#include <algorithm>
#include <cmath>

namespace absplat::testing {

namespace {

constexpr Scalar kShC0 = 0.28209479177387814;

Vec4 random_unit_quat(Rng& rng) {
  Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  while (q.norm() < 1e-6) q = Vec4(rng.normal(), rng.normal(), rng.normal(), rng.normal());
  return q / q.norm();
}

void set_dc_color(GaussianCloud& cloud, std::size_t i, const Vec3& rgb) {
  auto coeffs = cloud.coeffs(i);
  for (int c = 0; c < 3; ++c) coeffs[std::size_t(c)] = (rgb[c] - 0.5) / kShC0;
}

}  // namespace

GaussianCloud random_cloud_2d(Rng& rng, std::size_t n, int width, int height, int sh_degree) {
  GaussianCloud cloud;
  cloud.sh_degree = sh_degree;
  cloud.resize(n);
  const Scalar margin = 6.0;
  for (std::size_t i = 0; i < n; ++i) {
    cloud.positions[i] = Vec3(rng.uniform(margin, width - margin),
                              rng.uniform(margin, height - margin), rng.uniform(0.0, 1.0));
    const Scalar base = rng.uniform(std::log(1.2), std::log(5.0));
    cloud.log_scales[i] = Vec3(base + rng.uniform(-0.3, 0.3), base + rng.uniform(-0.3, 0.3),
                               rng.uniform(-1.0, 0.0));
    cloud.rotations[i] = random_unit_quat(rng);
    cloud.opacity_logits[i] = logit(rng.uniform(0.25, 0.9));
    set_dc_color(cloud, i, Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    if (sh_degree > 0) {
      auto coeffs = cloud.coeffs(i);
      for (std::size_t k = 3; k < coeffs.size(); ++k) coeffs[k] = rng.uniform(-0.15, 0.15);
    }
  }
  return cloud;
}

GaussianCloud random_cloud_3d(Rng& rng, std::size_t n, Scalar box_half, int sh_degree) {
  GaussianCloud cloud;
  cloud.sh_degree = sh_degree;
  cloud.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    cloud.positions[i] = Vec3(rng.uniform(-box_half, box_half), rng.uniform(-box_half, box_half),
                              rng.uniform(-box_half, box_half));
    const Scalar base = std::log(box_half * rng.uniform(0.05, 0.25));
    cloud.log_scales[i] = Vec3(base + rng.uniform(-0.4, 0.4), base + rng.uniform(-0.4, 0.4),
                               base + rng.uniform(-0.4, 0.4));
    cloud.rotations[i] = random_unit_quat(rng);
    cloud.opacity_logits[i] = logit(rng.uniform(0.25, 0.9));
    set_dc_color(cloud, i, Vec3(rng.uniform(), rng.uniform(), rng.uniform()));
    if (sh_degree > 0) {
      auto coeffs = cloud.coeffs(i);
      for (std::size_t k = 3; k < coeffs.size(); ++k) coeffs[k] = rng.uniform(-0.15, 0.15);
    }
  }
  return cloud;
}

std::vector<Camera> camera_ring(int count, int width, int height, Scalar focal,
                                Scalar distance, Scalar height_offset) {
  std::vector<Camera> cams;
  cams.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    const Scalar angle = 2.0 * M_PI * k / count;
    const Vec3 eye(distance * std::sin(angle), height_offset, -distance * std::cos(angle));
    cams.push_back(make_lookat_camera(eye, Vec3::Zero(), Vec3(0, 1, 0), focal, focal, width,
                                      height));
  }
  return cams;
}

std::vector<Camera> camera_arc(int count, int width, int height, Scalar focal,
                               Scalar distance, Scalar span, Scalar height_offset) {
  std::vector<Camera> cams;
  cams.reserve(std::size_t(count));
  for (int k = 0; k < count; ++k) {
    const Scalar t = count > 1 ? Scalar(k) / (count - 1) - 0.5 : 0.0;
    const Scalar angle = span * t;
    const Vec3 eye(distance * std::sin(angle), height_offset * std::cos(3.0 * t),
                   -distance * std::cos(angle));
    cams.push_back(make_lookat_camera(eye, Vec3::Zero(), Vec3(0, 1, 0), focal, focal, width,
                                      height));
  }
  return cams;
}

Image photo_like_image(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  Image img(width, height);

  // Smooth base: three low-frequency color waves with random phases.
  Scalar phases[6], freqs[6];
  for (int k = 0; k < 6; ++k) {
    phases[k] = rng.uniform(0.0, 2.0 * M_PI);
    freqs[k] = rng.uniform(1.0, 3.0);
  }
  // Bandlimited texture: bilinear value noise at two grid scales.
  const int g1 = 6, g2 = 17;
  std::vector<Scalar> lat1(std::size_t(g1 + 2) * (g1 + 2) * 3), lat2(std::size_t(g2 + 2) * (g2 + 2) * 3);
  for (auto& v : lat1) v = rng.uniform(-1.0, 1.0);
  for (auto& v : lat2) v = rng.uniform(-1.0, 1.0);
  auto lattice = [](const std::vector<Scalar>& lat, int g, Scalar u, Scalar v, int c) {
    const Scalar x = u * g, y = v * g;
    const int x0 = int(x), y0 = int(y);
    const Scalar fx = x - x0, fy = y - y0;
    auto at = [&](int ix, int iy) { return lat[(std::size_t(iy) * (g + 2) + ix) * 3 + c]; };
    return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
           (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
  };
  const Scalar edge_y = rng.uniform(0.35, 0.65);

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const Scalar u = (x + 0.5) / width, v = (y + 0.5) / height;
      for (int c = 0; c < 3; ++c) {
        Scalar val = 0.45 + 0.25 * std::sin(2.0 * M_PI * freqs[c] * u + phases[c]) *
                                std::cos(2.0 * M_PI * freqs[c + 3] * v + phases[c + 3]);
        val += 0.18 * lattice(lat1, g1, u, v, c);
        val += 0.12 * lattice(lat2, g2, u, v, c);
        if (v > edge_y) val = 0.8 * val + 0.2 * (c == 1 ? 0.7 : 0.25);
        img.at(x, y, c) = std::clamp(val, 0.0, 1.0);
      }
    }
  }
  return img;
}

Image noise_texture(int width, int height, std::uint64_t seed, int cell) {
  Rng rng(seed);
  const int gx = (width + cell - 1) / cell;
  const int gy = (height + cell - 1) / cell;
  std::vector<Vec3> cells(std::size_t(gx) * gy);
  for (auto& c : cells) c = Vec3(rng.uniform(), rng.uniform(), rng.uniform());
  Image img(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      img.set_pixel(x, y, cells[std::size_t(y / cell) * gx + x / cell]);
  return img;
}

GaussianCloud single_gaussian_for_image(const Image& target) {
  return init_single_gaussian(target);
}

GaussianCloud grid_init_for_image(const Image& target, int count) {
  return init_image_grid(target, count);
}

GaussianCloud textured_wall(const Image& texture, int grid, Scalar world_size) {
  GaussianCloud cloud;
  cloud.sh_degree = 0;
  cloud.resize(std::size_t(grid) * grid);
  const Scalar step = world_size / grid;
  for (int gy = 0; gy < grid; ++gy) {
    for (int gx = 0; gx < grid; ++gx) {
      const std::size_t i = std::size_t(gy) * grid + gx;
      const Scalar wx = (gx + 0.5) * step - world_size / 2.0;
      const Scalar wy = (gy + 0.5) * step - world_size / 2.0;
      cloud.positions[i] = Vec3(wx, wy, 0.0);
      cloud.log_scales[i] = Vec3::Constant(std::log(step * 0.6));
      cloud.opacity_logits[i] = logit(0.95);
      const int tx = std::min(texture.width() - 1, int((gx + 0.5) / grid * texture.width()));
      const int ty = std::min(texture.height() - 1, int((gy + 0.5) / grid * texture.height()));
      set_dc_color(cloud, i, texture.pixel(tx, ty));
    }
  }
  return cloud;
}

}  // namespace absplat::testing
