#pragma once

#include "absplat/backward.hpp"
#include "absplat/camera.hpp"
#include "absplat/densify.hpp"
#include "absplat/image.hpp"
#include "absplat/loss.hpp"

#include <functional>
#include <string>
#include <vector>

namespace absplat {

enum class Regime { view3d, image2d };

struct TrainConfig {
  int iterations = 30000;
  DensifyConfig densify;
  bool densify_enabled = true;
  Scalar loss_lambda_dssim = 0.2;

  // Position lr is multiplied by the scene extent and decays exponentially
  // to the final value over the run.
  Scalar lr_position = 1.6e-4;
  Scalar lr_position_final = 1.6e-6;
  Scalar lr_scale = 5e-3;
  Scalar lr_rotation = 1e-3;
  Scalar lr_opacity = 5e-2;
  Scalar lr_color = 2.5e-3;

  Regime regime = Regime::view3d;
  std::uint64_t seed = 0;
  int threads = 1;
  Vec3 background = Vec3::Zero();
  bool random_background = false;
  bool opacity_reset_enabled = true;
  int log_interval = 100;
  int checkpoint_interval = 0;  // 0: no intermediate checkpoints

  void validate() const;
};

// Training inputs. view3d: one target image per camera. image2d: a single
// target, cameras ignored.
struct Scene {
  std::vector<Camera> cameras;
  std::vector<Image> targets;
};

struct MetricsRow {
  int iteration = 0;
  Scalar loss = 0.0;
  Scalar psnr = 0.0;
  std::size_t num_gaussians = 0;
  int split_count = 0, clone_count = 0, pruned_count = 0;
  Strategy strategy = Strategy::baseline;
};

struct DensifyEvent {
  int iteration = 0;
  const GaussianCloud* cloud = nullptr;  // state the selection was made from
  const SelectionReport* report = nullptr;
  DensifyContext context;
  DensifyConfig config;
};

struct TrainHooks {
  std::function<void(const DensifyEvent&)> on_densify;
  std::function<void(int, const GaussianCloud&)> on_checkpoint;
};

struct TrainResult {
  GaussianCloud cloud;
  std::vector<MetricsRow> log;
};

// Seeded, deterministic optimization loop: shuffled epoch view order, Adam
// over all parameter groups, per-view ledger accumulation, densification
// every densify_interval iterations in [densify_from, densify_until],
// opacity resets at their configured cadence. Aborts on non-finite loss.
TrainResult train(GaussianCloud cloud, const Scene& scene, const TrainConfig& config,
                  const TrainHooks& hooks = {});

Scalar scene_extent(const Scene& scene, Regime regime);

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path);

// PLY-backed checkpointing (see ply.hpp for the format contract).
void checkpoint(const GaussianCloud& cloud, const std::string& path);
GaussianCloud restore(const std::string& path);

}  // namespace absplat
