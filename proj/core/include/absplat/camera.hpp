#pragma once

#include "absplat/types.hpp"

#include <string>
#include <vector>

namespace absplat {

struct Camera {
  Mat4 world_to_camera = Mat4::Identity();
  Scalar fx = 1.0, fy = 1.0;
  Scalar cx = 0.0, cy = 0.0;
  int width = 0, height = 0;
  Scalar near = 0.2;

  Mat3 rotation() const { return world_to_camera.topLeftCorner<3, 3>(); }
  Vec3 translation() const { return world_to_camera.topRightCorner<3, 1>(); }
  // Camera center in world coordinates.
  Vec3 center() const { return -rotation().transpose() * translation(); }
  Vec3 forward() const { return rotation().row(2).transpose(); }

  // Enforces the load-time invariants: orthonormal rotation block (1e-6),
  // positive focals, nonzero viewport.
  void validate() const;
};

struct CameraView {
  int id = 0;
  Camera camera;
  std::string image_path;
};

// JSON array of {id, width, height, fx, fy, cx, cy,
// world_to_camera: [16 row-major], image_path}; "near" is optional.
std::vector<CameraView> load_cameras(const std::string& path);
void save_cameras(const std::vector<CameraView>& views, const std::string& path);

// Look-at constructor used by synthetic scenes and tests.
Camera make_lookat_camera(const Vec3& eye, const Vec3& target, const Vec3& up, Scalar fx,
                          Scalar fy, int width, int height);

}  // namespace absplat
