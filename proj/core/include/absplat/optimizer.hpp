#pragma once

#include "absplat/backward.hpp"
#include "absplat/cloud.hpp"

#include <cstdint>
#include <vector>

namespace absplat {

// Adam over the five Gaussian parameter groups. Moments live per scalar;
// densification rewires them through surgery() so surviving rows keep their
// state exactly and fresh rows start at zero.
struct AdamHyper {
  Scalar beta1 = 0.9;
  Scalar beta2 = 0.999;
  Scalar eps = 1e-15;
};

class Adam {
 public:
  using Hyper = AdamHyper;

  struct Lrs {
    Scalar position = 0.0;
    Scalar log_scale = 5e-3;
    Scalar rotation = 1e-3;
    Scalar opacity = 5e-2;
    Scalar color = 2.5e-3;
  };

  Adam(std::size_t n, int coeffs_per_gaussian, const Hyper& hyper = Hyper{});

  void step(GaussianCloud& cloud, const ViewGradients& grads, const Lrs& lrs);

  // Rebuilds moment rows after densify: source_row[r] >= 0 copies the old
  // row's state, -1 zero-initializes.
  void surgery(const std::vector<std::int32_t>& source_row);

  // Clears opacity moments (used together with opacity resets).
  void reset_opacity_state();

  std::int64_t step_count() const { return t_; }

 private:
  struct Group {
    std::vector<Scalar> m, v;
  };

  void step_group(Group& g, std::size_t count, const Scalar* grad, Scalar* param, Scalar lr,
                  Scalar bc1, Scalar bc2);
  static void remap(Group& g, std::size_t width, const std::vector<std::int32_t>& source_row);

  Hyper hyper_;
  Group positions_, log_scales_, rotations_, opacities_, colors_;
  std::size_t coeffs_k_;
  std::int64_t t_ = 0;
};

}  // namespace absplat
