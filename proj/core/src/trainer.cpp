#include "absplat/trainer.hpp"

#include "absplat/metrics.hpp"
#include "absplat/optimizer.hpp"
#include "absplat/ply.hpp"
#include "absplat/rng.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace absplat {

void TrainConfig::validate() const {
  if (iterations < 0) throw std::invalid_argument("iterations must be non-negative");
  if (loss_lambda_dssim < 0.0 || loss_lambda_dssim > 1.0)
    throw std::invalid_argument("loss_lambda_dssim must lie in [0, 1]");
  if (densify_enabled) {
    densify.validate();
    if (iterations < densify.densify_until)
      throw std::invalid_argument("iterations must cover densify_until");
  }
}

Scalar scene_extent(const Scene& scene, Regime regime) {
  if (regime == Regime::image2d) {
    if (scene.targets.empty()) throw std::invalid_argument("image2d scene needs a target");
    const Image& t = scene.targets.front();
    return std::hypot(Scalar(t.width()), Scalar(t.height()));
  }
  if (scene.cameras.empty()) throw std::invalid_argument("view3d scene needs cameras");
  Vec3 mean = Vec3::Zero();
  for (const auto& cam : scene.cameras) mean += cam.center();
  mean /= Scalar(scene.cameras.size());
  Scalar radius = 0.0;
  for (const auto& cam : scene.cameras)
    radius = std::max(radius, (cam.center() - mean).norm());
  return radius > 1e-9 ? radius : 1.0;
}

namespace {

Scalar position_lr(const TrainConfig& config, Scalar extent, int iteration) {
  const Scalar lr0 = config.lr_position * extent;
  const Scalar lr1 = config.lr_position_final * extent;
  if (config.iterations <= 1) return lr0;
  const Scalar t = Scalar(iteration - 1) / Scalar(config.iterations - 1);
  return lr0 * std::pow(lr1 / lr0, t);
}

void check_scene(const Scene& scene, Regime regime) {
  if (scene.targets.empty()) throw std::invalid_argument("no training views");
  if (regime == Regime::view3d) {
    if (scene.cameras.size() != scene.targets.size())
      throw std::invalid_argument("camera/target count mismatch");
    for (std::size_t i = 0; i < scene.cameras.size(); ++i) {
      scene.cameras[i].validate();
      if (scene.targets[i].width() != scene.cameras[i].width ||
          scene.targets[i].height() != scene.cameras[i].height)
        throw std::invalid_argument("target size does not match camera viewport");
    }
  }
}

}  // namespace

TrainResult train(GaussianCloud cloud, const Scene& scene, const TrainConfig& config,
                  const TrainHooks& hooks) {
  config.validate();
  check_scene(scene, config.regime);

  const Scalar extent = scene_extent(scene, config.regime);
  const std::size_t n_views = config.regime == Regime::image2d ? 1 : scene.targets.size();

  Scalar screen_cap = 0.0;
  for (const auto& t : scene.targets)
    screen_cap = std::max(screen_cap,
                          config.densify.guard_screen_frac * std::max(t.width(), t.height()));

  Adam optimizer(cloud.size(), cloud.coeffs_per_gaussian());
  Rng view_rng(config.seed ^ 0xA076'1D64'78BD'642FULL);
  Rng bg_rng(config.seed ^ 0xE703'7ED1'A0B4'28DBULL);

  std::vector<std::size_t> epoch(n_views);
  for (std::size_t i = 0; i < n_views; ++i) epoch[i] = i;
  std::size_t epoch_pos = n_views;  // force an initial shuffle

  TrainResult result;
  int splits_in_window = 0, clones_in_window = 0, pruned_in_window = 0;

  for (int iter = 1; iter <= config.iterations; ++iter) {
    if (epoch_pos >= n_views) {
      view_rng.shuffle(epoch);
      epoch_pos = 0;
    }
    const std::size_t view = epoch[epoch_pos++];
    const Image& target = scene.targets[view];

    RenderOptions ropt;
    ropt.threads = config.threads;
    ropt.background = config.random_background
                          ? Vec3(bg_rng.uniform(), bg_rng.uniform(), bg_rng.uniform())
                          : config.background;

    ProjectOptions popt;
    popt.threads = config.threads;
    BackwardOptions bopt;
    bopt.threads = config.threads;

    std::vector<ProjectedGaussian> projected;
    if (config.regime == Regime::image2d) {
      projected = project_identity(cloud, target.width(), target.height(), popt);
    } else {
      projected = project(cloud, scene.cameras[view], popt);
    }

    RenderArtifacts artifacts;
    const Image rendered = render(projected, target.width(), target.height(), ropt, &artifacts);
    const LossResult L = loss(rendered, target, config.loss_lambda_dssim);
    if (!std::isfinite(L.value)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << iter << " (view " << view << ", "
          << cloud.size() << " gaussians)";
      throw std::runtime_error(msg.str());
    }

    const ViewGradients grads =
        config.regime == Regime::image2d
            ? backward_identity(cloud, projected, artifacts, L.grad, ropt, bopt)
            : backward(cloud, projected, artifacts, L.grad, scene.cameras[view], ropt, bopt);

    Adam::Lrs lrs;
    lrs.position = position_lr(config, extent, iter);
    lrs.log_scale = config.lr_scale;
    lrs.rotation = config.lr_rotation;
    lrs.opacity = config.lr_opacity;
    lrs.color = config.lr_color;
    optimizer.step(cloud, grads, lrs);
    for (auto& q : cloud.rotations) q.normalize();

    accumulate_ledger(cloud, grads);

    const bool densify_now = config.densify_enabled && config.densify.densify_interval > 0 &&
                             iter % config.densify.densify_interval == 0 &&
                             iter >= config.densify.densify_from &&
                             iter <= config.densify.densify_until;
    if (densify_now) {
      DensifyContext ctx;
      ctx.scene_extent = extent;
      ctx.screen_radius_cap = screen_cap;
      ctx.apply_guards = config.densify.guard_caps &&
                         iter > config.densify.opacity_reset_interval;
      const SelectionReport report = select(cloud, config.densify, ctx);
      if (hooks.on_densify) {
        DensifyEvent event;
        event.iteration = iter;
        event.cloud = &cloud;
        event.report = &report;
        event.context = ctx;
        event.config = config.densify;
        hooks.on_densify(event);
      }
      const std::uint64_t apply_seed =
          config.seed * 0x9E3779B97F4A7C15ULL + std::uint64_t(iter);
      const ApplyResult applied = apply(cloud, report, config.densify, apply_seed);
      optimizer.surgery(applied.source_row);
      splits_in_window += int(applied.n_split);
      clones_in_window += int(applied.n_cloned);
      pruned_in_window += int(applied.n_pruned);
    }

    if (config.opacity_reset_enabled && config.densify_enabled &&
        config.densify.opacity_reset_interval > 0 &&
        iter % config.densify.opacity_reset_interval == 0 &&
        iter <= config.densify.densify_until) {
      const Scalar cap = logit(0.01);
      for (auto& o : cloud.opacity_logits) o = std::min(o, cap);
      optimizer.reset_opacity_state();
    }

    if (hooks.on_checkpoint && config.checkpoint_interval > 0 &&
        iter % config.checkpoint_interval == 0) {
      hooks.on_checkpoint(iter, cloud);
    }

    if ((config.log_interval > 0 && iter % config.log_interval == 0) ||
        iter == config.iterations) {
      MetricsRow row;
      row.iteration = iter;
      row.loss = L.value;
      row.psnr = psnr(rendered, target);
      row.num_gaussians = cloud.size();
      row.split_count = splits_in_window;
      row.clone_count = clones_in_window;
      row.pruned_count = pruned_in_window;
      row.strategy = config.densify.strategy;
      result.log.push_back(row);
      splits_in_window = clones_in_window = pruned_in_window = 0;
    }
  }

  result.cloud = std::move(cloud);
  return result;
}

void write_metrics_csv(const std::vector<MetricsRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write metrics csv: " + path);
  out << "iteration,loss,psnr,num_gaussians,split_count,clone_count,pruned_count,strategy\n";
  out << std::setprecision(17);
  for (const auto& row : rows) {
    out << row.iteration << ',' << row.loss << ',' << row.psnr << ',' << row.num_gaussians
        << ',' << row.split_count << ',' << row.clone_count << ',' << row.pruned_count << ','
        << strategy_name(row.strategy) << '\n';
  }
}

void checkpoint(const GaussianCloud& cloud, const std::string& path) { save_ply(cloud, path); }

GaussianCloud restore(const std::string& path) { return load_ply(path); }

}  // namespace absplat
