#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>

namespace absplat {

// All scene math runs in double; float32 appears only at file-format
// boundaries (PLY attributes, PFM pixels).
using Scalar = double;

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

using GaussianId = std::int32_t;

inline Scalar sigmoid(Scalar x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Scalar logit(Scalar p) { return std::log(p) - std::log(1.0 - p); }

}  // namespace absplat
