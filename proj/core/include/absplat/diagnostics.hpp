#pragma once

#include "absplat/trainer.hpp"

#include <string>
#include <vector>

namespace absplat {

// Per-Gaussian collision statistics for one view: footprint pixel count m,
// per-view gradient norms, and the collision ratio rho = |g| / |g_hat|
// (defined 1 when g_hat is zero). rho near 0 means sub-gradients cancelled.
struct CollisionRow {
  GaussianId id = -1;
  std::uint32_t footprint = 0;
  Scalar g_norm = 0.0;
  Scalar ghat_norm = 0.0;
  Scalar rho = 1.0;
  Scalar rho_x = 1.0, rho_y = 1.0;  // componentwise ratios
};

struct CollisionReport {
  std::vector<CollisionRow> rows;  // touched Gaussians, id order
  // Joint distribution: footprint log2-bins x rho decile bins.
  std::vector<std::vector<int>> histogram;
};

struct CollisionOptions {
  int threads = 1;
  Scalar lambda_dssim = 0.0;  // gradients analyzed under plain L1 by default
  int top_k_sign_maps = 3;    // largest footprints get sign-map exports
  std::string out_dir;        // empty: no files written
};

// Renders view 0 of the scene, backpropagates the loss, and reconciles the
// signed and homodirectional accumulators per Gaussian.
CollisionReport collision_report(const GaussianCloud& cloud, const Scene& scene,
                                 Regime regime, const CollisionOptions& options = {});

void write_collision_report_json(const CollisionReport& report, const std::string& path);

struct SweepCell {
  Scalar tau_p = 0.0, tau_s = 0.0;
  Strategy strategy = Strategy::baseline;
  std::size_t selected = 0;  // cumulative split+clone selections over the run
  std::size_t final_n = 0;
  Scalar psnr = 0.0;
  Scalar ssim = 0.0;
  std::size_t bytes = 0;  // final_n x float32 parameters per Gaussian
};

// Trains one run per (tau_p, tau_s) cell from the same initial cloud and
// seed, recording quality/size trade-offs. Writes a selection mask at each
// cell's first densify event when out_dir is set.
std::vector<SweepCell> threshold_sweep(const Scene& scene, const GaussianCloud& init,
                                       const TrainConfig& base, Strategy strategy,
                                       const std::vector<Scalar>& tau_p_list,
                                       const std::vector<Scalar>& tau_s_list,
                                       const std::string& out_dir = {});

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::string& path);

std::size_t bytes_per_gaussian(int sh_degree);

}  // namespace absplat
