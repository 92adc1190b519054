#include <doctest.h>

#include "absplat/loss.hpp"
#include "absplat/metrics.hpp"
#include "fixtures.hpp"

#include <cmath>

using namespace absplat;
using namespace absplat::testing;

namespace {

// Oracle: plain 2D windowed SSIM, no separability, nested loops.
Scalar ssim_direct(const Image& a, const Image& b) {
  const int win = 11, rad = 5;
  const Scalar sigma = 1.5, c1 = 1e-4, c2 = 9e-4;
  Scalar weights[11][11];
  Scalar wsum = 0.0;
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) {
      const Scalar d2 = (i - rad) * (i - rad) + (j - rad) * (j - rad);
      weights[i][j] = std::exp(-d2 / (2 * sigma * sigma));
      wsum += weights[i][j];
    }
  for (int i = 0; i < win; ++i)
    for (int j = 0; j < win; ++j) weights[i][j] /= wsum;

  Scalar total = 0.0;
  int count = 0;
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y + win <= a.height(); ++y) {
      for (int x = 0; x + win <= a.width(); ++x) {
        Scalar ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < win; ++i)
          for (int j = 0; j < win; ++j) {
            const Scalar va = a.at(x + j, y + i, c);
            const Scalar vb = b.at(x + j, y + i, c);
            ma += weights[i][j] * va;
            mb += weights[i][j] * vb;
            saa += weights[i][j] * va * va;
            sbb += weights[i][j] * vb * vb;
            sab += weights[i][j] * va * vb;
          }
        const Scalar var_a = saa - ma * ma, var_b = sbb - mb * mb, cov = sab - ma * mb;
        total += ((2 * ma * mb + c1) * (2 * cov + c2)) /
                 ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
        ++count;
      }
    }
  }
  return total / count;
}

}  // namespace

TEST_CASE("psnr basics") {
  const Image a = photo_like_image(24, 18, 1);
  CHECK(std::isinf(psnr(a, a)));

  Image b = a;
  for (auto& v : b.data()) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));

  // Direct MSE recomputation.
  Image c = photo_like_image(24, 18, 2);
  Scalar mse = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    const Scalar d = a.data()[i] - c.data()[i];
    mse += d * d;
  }
  mse /= Scalar(a.data().size());
  CHECK(psnr(a, c) == doctest::Approx(10.0 * std::log10(1.0 / mse)).epsilon(1e-12));
  CHECK(psnr(a, c) == doctest::Approx(psnr(c, a)).epsilon(1e-12));
}

TEST_CASE("psnr decreases as uniform noise grows") {
  const Image a = photo_like_image(32, 32, 5);
  Scalar prev = std::numeric_limits<Scalar>::infinity();
  for (Scalar amp : {0.01, 0.05, 0.1, 0.2}) {
    Image noisy = a;
    Rng rng(99);
    for (auto& v : noisy.data()) v += amp * (rng.uniform() - 0.5);
    const Scalar p = psnr(a, noisy);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim identical and symmetry") {
  const Image a = photo_like_image(28, 22, 7);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  const Image b = photo_like_image(28, 22, 8);
  CHECK(ssim(a, b) == doctest::Approx(ssim(b, a)).epsilon(1e-12));
}

TEST_CASE("ssim of two constant half-gray images is 1") {
  Image a(16, 16, Vec3::Constant(0.5));
  Image b(16, 16, Vec3::Constant(0.5));
  CHECK(ssim(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim matches the direct-convolution oracle") {
  const Image a = photo_like_image(30, 26, 41);
  const Image b = photo_like_image(30, 26, 42);
  CHECK(ssim(a, b) == doctest::Approx(ssim_direct(a, b)).epsilon(1e-6));
}

TEST_CASE("ssim rejects images smaller than the window") {
  Image a(8, 8), b(8, 8);
  CHECK_THROWS(ssim(a, b));
}

TEST_CASE("loss trivial cases") {
  const Image a = photo_like_image(20, 20, 3);
  const LossResult zero = loss(a, a, 0.0);
  CHECK(zero.value == 0.0);
  for (Scalar v : zero.grad.data()) CHECK(v == 0.0);

  Image shifted = a;
  for (auto& v : shifted.data()) v += 0.25;
  const LossResult l = loss(shifted, a, 0.0);
  CHECK(l.value == doctest::Approx(0.25).epsilon(1e-12));
  const Scalar expected = 1.0 / Scalar(shifted.data().size());
  for (Scalar v : l.grad.data()) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss dimension mismatch throws") {
  Image a(10, 10), b(12, 10);
  CHECK_THROWS(loss(a, b, 0.0));
}

TEST_CASE("loss gradient matches finite differences at lambda 0.2") {
  const int w = 20, h = 16;
  Image rendered = photo_like_image(w, h, 61);
  const Image target = photo_like_image(w, h, 62);
  const Scalar lambda = 0.2;
  const LossResult L = loss(rendered, target, lambda);

  Rng rng(63);
  const Scalar step = 1e-5;
  for (int probe = 0; probe < 200; ++probe) {
    const std::size_t i = rng.uniform_index(rendered.data().size());
    const Scalar saved = rendered.data()[i];
    rendered.data()[i] = saved + step;
    const Scalar hi = loss(rendered, target, lambda).value;
    rendered.data()[i] = saved - step;
    const Scalar lo = loss(rendered, target, lambda).value;
    rendered.data()[i] = saved;
    const Scalar fd = (hi - lo) / (2 * step);
    const Scalar analytic = L.grad.data()[i];
    CHECK(std::abs(analytic - fd) <= 1e-4 * std::max({1.0e-3, std::abs(analytic), std::abs(fd)}));
  }
}
