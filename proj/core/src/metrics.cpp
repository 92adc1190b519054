#include "absplat/metrics.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace absplat {

namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr Scalar kSigma = 1.5;
constexpr Scalar kC1 = 0.01 * 0.01;
constexpr Scalar kC2 = 0.03 * 0.03;

std::array<Scalar, kWindow> gaussian_taps() {
  std::array<Scalar, kWindow> taps{};
  Scalar sum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const Scalar d = i - kRadius;
    taps[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

// Channel plane extracted as a flat field for the convolutions.
std::vector<Scalar> plane(const Image& img, int c) {
  std::vector<Scalar> out(img.pixel_count());
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) out[std::size_t(y) * img.width() + x] = img.at(x, y, c);
  return out;
}

// Valid-region separable correlation: output is (w-10) x (h-10).
std::vector<Scalar> conv_valid(const std::vector<Scalar>& in, int w, int h,
                               const std::array<Scalar, kWindow>& taps) {
  const int vw = w - kWindow + 1;
  const int vh = h - kWindow + 1;
  std::vector<Scalar> rows(std::size_t(vw) * h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < vw; ++x) {
      Scalar s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * in[std::size_t(y) * w + x + k];
      rows[std::size_t(y) * vw + x] = s;
    }
  }
  std::vector<Scalar> out(std::size_t(vw) * vh, 0.0);
  for (int y = 0; y < vh; ++y) {
    for (int x = 0; x < vw; ++x) {
      Scalar s = 0.0;
      for (int k = 0; k < kWindow; ++k) s += taps[k] * rows[std::size_t(y + k) * vw + x];
      out[std::size_t(y) * vw + x] = s;
    }
  }
  return out;
}

void check_pair(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw std::invalid_argument("image dimension mismatch");
  if (a.empty()) throw std::invalid_argument("empty image");
}

struct ChannelMoments {
  std::vector<Scalar> mu_a, mu_b, m_aa, m_bb, m_ab;
  int vw, vh;
};

ChannelMoments moments(const std::vector<Scalar>& pa, const std::vector<Scalar>& pb, int w,
                       int h, const std::array<Scalar, kWindow>& taps) {
  ChannelMoments m;
  m.vw = w - kWindow + 1;
  m.vh = h - kWindow + 1;
  std::vector<Scalar> aa(pa.size()), bb(pa.size()), ab(pa.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    aa[i] = pa[i] * pa[i];
    bb[i] = pb[i] * pb[i];
    ab[i] = pa[i] * pb[i];
  }
  m.mu_a = conv_valid(pa, w, h, taps);
  m.mu_b = conv_valid(pb, w, h, taps);
  m.m_aa = conv_valid(aa, w, h, taps);
  m.m_bb = conv_valid(bb, w, h, taps);
  m.m_ab = conv_valid(ab, w, h, taps);
  return m;
}

}  // namespace

Scalar psnr(const Image& a, const Image& b) {
  check_pair(a, b);
  Scalar mse = 0.0;
  const std::size_t n = a.data().size();
  for (std::size_t i = 0; i < n; ++i) {
    const Scalar d = a.data()[i] - b.data()[i];
    mse += d * d;
  }
  mse /= Scalar(n);
  if (mse == 0.0) return std::numeric_limits<Scalar>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

Scalar ssim(const Image& a, const Image& b) {
  check_pair(a, b);
  if (a.width() < kWindow || a.height() < kWindow)
    throw std::invalid_argument("image smaller than ssim window");
  static const auto taps = gaussian_taps();

  Scalar total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto pa = plane(a, c);
    const auto pb = plane(b, c);
    const ChannelMoments m = moments(pa, pb, a.width(), a.height(), taps);
    Scalar channel = 0.0;
    for (std::size_t i = 0; i < m.mu_a.size(); ++i) {
      const Scalar mu_a = m.mu_a[i], mu_b = m.mu_b[i];
      const Scalar var_a = m.m_aa[i] - mu_a * mu_a;
      const Scalar var_b = m.m_bb[i] - mu_b * mu_b;
      const Scalar cov = m.m_ab[i] - mu_a * mu_b;
      const Scalar a1 = 2.0 * mu_a * mu_b + kC1;
      const Scalar a2 = 2.0 * cov + kC2;
      const Scalar b1 = mu_a * mu_a + mu_b * mu_b + kC1;
      const Scalar b2 = var_a + var_b + kC2;
      channel += (a1 * a2) / (b1 * b2);
    }
    total += channel / Scalar(m.mu_a.size());
  }
  return total / 3.0;
}

Scalar ssim_with_grad(const Image& a, const Image& b, Image& d_a) {
  check_pair(a, b);
  if (a.width() < kWindow || a.height() < kWindow)
    throw std::invalid_argument("image smaller than ssim window");
  static const auto taps = gaussian_taps();

  const int w = a.width(), h = a.height();
  d_a = Image(w, h);

  Scalar total = 0.0;
  for (int c = 0; c < 3; ++c) {
    const auto pa = plane(a, c);
    const auto pb = plane(b, c);
    const ChannelMoments m = moments(pa, pb, w, h, taps);
    const Scalar norm = 1.0 / (3.0 * Scalar(m.mu_a.size()));

    for (int vy = 0; vy < m.vh; ++vy) {
      for (int vx = 0; vx < m.vw; ++vx) {
        const std::size_t i = std::size_t(vy) * m.vw + vx;
        const Scalar mu_a = m.mu_a[i], mu_b = m.mu_b[i];
        const Scalar var_a = m.m_aa[i] - mu_a * mu_a;
        const Scalar var_b = m.m_bb[i] - mu_b * mu_b;
        const Scalar cov = m.m_ab[i] - mu_a * mu_b;
        const Scalar a1 = 2.0 * mu_a * mu_b + kC1;
        const Scalar a2 = 2.0 * cov + kC2;
        const Scalar b1 = mu_a * mu_a + mu_b * mu_b + kC1;
        const Scalar b2 = var_a + var_b + kC2;
        const Scalar denom = b1 * b2;
        const Scalar s = (a1 * a2) / denom;
        total += s * 3.0 * norm;  // running channel mean, like ssim()

        // dS w.r.t. the window moments; sigma and cov chain back through mu.
        const Scalar d_mu =
            2.0 * (mu_b * (a2 - a1) / denom + mu_a * s * (1.0 / b2 - 1.0 / b1));
        const Scalar d_maa = -s / b2;
        const Scalar d_mab = 2.0 * a1 / denom;

        for (int ky = 0; ky < kWindow; ++ky) {
          const Scalar wy = taps[ky];
          const int y = vy + ky;
          for (int kx = 0; kx < kWindow; ++kx) {
            const Scalar wgt = wy * taps[kx];
            const int x = vx + kx;
            const std::size_t q = std::size_t(y) * w + x;
            d_a.at(x, y, c) += norm * wgt * (d_mu + 2.0 * pa[q] * d_maa + pb[q] * d_mab);
          }
        }
      }
    }
  }
  return total / 3.0;
}

}  // namespace absplat
