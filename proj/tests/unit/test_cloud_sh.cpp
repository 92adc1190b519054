#include <doctest.h>

#include "absplat/cloud.hpp"
#include "absplat/rng.hpp"
#include "absplat/sh.hpp"

#include <cmath>

using namespace absplat;

namespace {

// Independent quaternion route: rotate basis vectors via the sandwich
// product q v q* instead of the closed-form matrix.
Vec4 quat_mul(const Vec4& a, const Vec4& b) {
  return Vec4(a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
              a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
              a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
              a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]);
}

Mat3 rotation_by_sandwich(const Vec4& q) {
  const Vec4 u = q / q.norm();
  const Vec4 conj(u[0], -u[1], -u[2], -u[3]);
  Mat3 r;
  for (int col = 0; col < 3; ++col) {
    Vec4 v(0, 0, 0, 0);
    v[col + 1] = 1.0;
    const Vec4 rotated = quat_mul(quat_mul(u, v), conj);
    r.col(col) = Vec3(rotated[1], rotated[2], rotated[3]);
  }
  return r;
}

}  // namespace

TEST_CASE("covariance3d identity cases") {
  GaussianCloud cloud;
  cloud.resize(2);
  CHECK((covariance3d(cloud, 0) - Mat3::Identity()).norm() == doctest::Approx(0.0));

  cloud.log_scales[1] = Vec3(std::log(2.0), 0.0, 0.0);
  Mat3 expected = Mat3::Identity();
  expected(0, 0) = 4.0;
  CHECK((covariance3d(cloud, 1) - expected).norm() < 1e-12);
}

TEST_CASE("covariance3d matches brute-force quaternion oracle") {
  Rng rng(7);
  GaussianCloud cloud;
  cloud.resize(1);
  for (int trial = 0; trial < 50; ++trial) {
    Vec4 q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    cloud.rotations[0] = q / q.norm();
    cloud.log_scales[0] = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));

    const Mat3 r = rotation_by_sandwich(cloud.rotations[0]);
    const Vec3 s = cloud.log_scales[0].array().exp();
    const Mat3 expected = r * s.asDiagonal() * s.asDiagonal() * r.transpose();
    CHECK((covariance3d(cloud, 0) - expected).cwiseAbs().maxCoeff() < 1e-12);

    // Sign flip invariance.
    cloud.rotations[0] = -cloud.rotations[0];
    CHECK((covariance3d(cloud, 0) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("ledger reset and idempotence") {
  GaussianCloud cloud;
  cloud.resize(3);
  cloud.ledger.signed_accum[1] = 0.5;
  cloud.ledger.homodir_accum[1] = 0.9;
  cloud.ledger.view_count[1] = 4;
  cloud.ledger.max_screen_radius[2] = 11.0;

  cloud.reset_ledger();
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(cloud.ledger.signed_accum[i] == 0.0);
    CHECK(cloud.ledger.homodir_accum[i] == 0.0);
    CHECK(cloud.ledger.view_count[i] == 0);
    CHECK(cloud.ledger.max_screen_radius[i] == 0.0);
  }
}

TEST_CASE("eval_color degree 0") {
  const Scalar c0 = 0.28209479177;
  std::vector<Scalar> coeffs = {1.0, -0.5, 2.0};
  const Vec3 rgb = eval_color(coeffs, Vec3(0, 0, 1), 0);
  CHECK(rgb[0] == doctest::Approx(1.0 * c0 + 0.5).epsilon(1e-9));
  CHECK(rgb[1] == doctest::Approx(std::max(0.0, -0.5 * c0 + 0.5)).epsilon(1e-9));
  CHECK(rgb[2] == doctest::Approx(2.0 * c0 + 0.5).epsilon(1e-9));
}

TEST_CASE("eval_color degree 0 is direction independent") {
  // Coefficients tuned so the output is (1, 0, 0) for any direction.
  const Scalar c0 = 0.28209479177387814;
  std::vector<Scalar> coeffs = {0.5 / c0, -0.5 / c0, -0.5 / c0};
  Rng rng(11);
  for (int k = 0; k < 100; ++k) {
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    const Vec3 rgb = eval_color(coeffs, dir, 0);
    CHECK(rgb[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rgb[1] == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(rgb[2] == doctest::Approx(0.0).epsilon(1e-12));
  }
}

TEST_CASE("eval_color degree 2 matches term-by-term oracle") {
  // Oracle: explicit polynomial list, summed one term at a time.
  auto oracle_basis = [](const Vec3& d, int k) -> Scalar {
    const Scalar x = d.x(), y = d.y(), z = d.z();
    switch (k) {
      case 0: return 0.28209479177387814;
      case 1: return -0.4886025119029199 * y;
      case 2: return 0.4886025119029199 * z;
      case 3: return -0.4886025119029199 * x;
      case 4: return 1.0925484305920792 * x * y;
      case 5: return -1.0925484305920792 * y * z;
      case 6: return 0.31539156525252005 * (2 * z * z - x * x - y * y);
      case 7: return -1.0925484305920792 * x * z;
      case 8: return 0.5462742152960396 * (x * x - y * y);
      default: return 0.0;
    }
  };
  Rng rng(23);
  std::vector<Scalar> coeffs(27);
  for (int trial = 0; trial < 20; ++trial) {
    for (auto& c : coeffs) c = rng.uniform(-1.0, 1.0);
    Vec3 dir(rng.normal(), rng.normal(), rng.normal());
    dir.normalize();
    const Vec3 rgb = eval_color(coeffs, dir, 2);
    for (int c = 0; c < 3; ++c) {
      Scalar expect = 0.5;
      for (int k = 0; k < 9; ++k) expect += oracle_basis(dir, k) * coeffs[std::size_t(k) * 3 + c];
      expect = std::max(expect, 0.0);
      CHECK(rgb[c] == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}
