#include "absplat/diagnostics.hpp"
#include "absplat/init.hpp"
#include "absplat/metrics.hpp"
#include "absplat/ply.hpp"
#include "absplat/trainer.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace absplat;

namespace {

// Exit codes: 0 success, 1 usage, 2 I/O, 3 numerical abort.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Flat key/value view of TrainConfig plus a few CLI-only knobs. Defaults
// here are the documented ones; a config file overrides them, flags override
// both.
struct Options {
  TrainConfig train;
  std::string strategy = "baseline";
  std::vector<Scalar> background = {0.0, 0.0, 0.0};
  int holdout_every = 0;
  int n_init = 64;
  bool single_gaussian = false;
  Scalar init_scale_frac = 0.02;
  int sh_degree = 0;
  bool diagnose = false;
  bool write_pfm = false;
};

void apply_config_file(Options& opt, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config parse error in " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw UsageError("config must be a flat json object: " + path);

  TrainConfig& t = opt.train;
  DensifyConfig& d = t.densify;
  for (const auto& [key, value] : doc.items()) {
    try {
      if (key == "iterations") t.iterations = value.get<int>();
      else if (key == "loss_lambda_dssim") t.loss_lambda_dssim = value.get<Scalar>();
      else if (key == "lr_position") t.lr_position = value.get<Scalar>();
      else if (key == "lr_position_final") t.lr_position_final = value.get<Scalar>();
      else if (key == "lr_scale") t.lr_scale = value.get<Scalar>();
      else if (key == "lr_rotation") t.lr_rotation = value.get<Scalar>();
      else if (key == "lr_opacity") t.lr_opacity = value.get<Scalar>();
      else if (key == "lr_color") t.lr_color = value.get<Scalar>();
      else if (key == "seed") t.seed = value.get<std::uint64_t>();
      else if (key == "threads") t.threads = value.get<int>();
      else if (key == "random_background") t.random_background = value.get<bool>();
      else if (key == "opacity_reset_enabled") t.opacity_reset_enabled = value.get<bool>();
      else if (key == "log_interval") t.log_interval = value.get<int>();
      else if (key == "checkpoint_interval") t.checkpoint_interval = value.get<int>();
      else if (key == "densify_enabled") t.densify_enabled = value.get<bool>();
      else if (key == "background") opt.background = value.get<std::vector<Scalar>>();
      else if (key == "tau_p") d.tau_p = value.get<Scalar>();
      else if (key == "tau_s") d.tau_s = value.get<Scalar>();
      else if (key == "strategy") opt.strategy = value.get<std::string>();
      else if (key == "split_count") d.split_count = value.get<int>();
      else if (key == "split_scale_divisor") d.split_scale_divisor = value.get<Scalar>();
      else if (key == "prune_opacity") d.prune_opacity = value.get<Scalar>();
      else if (key == "densify_interval") d.densify_interval = value.get<int>();
      else if (key == "densify_from") d.densify_from = value.get<int>();
      else if (key == "densify_until") d.densify_until = value.get<int>();
      else if (key == "opacity_reset_interval") d.opacity_reset_interval = value.get<int>();
      else if (key == "guard_caps") d.guard_caps = value.get<bool>();
      else if (key == "holdout_every") opt.holdout_every = value.get<int>();
      else if (key == "n_init") opt.n_init = value.get<int>();
      else if (key == "init_scale_frac") opt.init_scale_frac = value.get<Scalar>();
      else if (key == "sh_degree") opt.sh_degree = value.get<int>();
      else throw UsageError("unknown config key '" + key + "' in " + path);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config key '" + key + "' in " + path + ": " + e.what());
    }
  }
}

// Flags mirror config-file keys; every config value can be overridden.
void add_train_flags(CLI::App* cmd, Options& opt) {
  TrainConfig& t = opt.train;
  DensifyConfig& d = t.densify;
  cmd->add_option("--iterations", t.iterations, "Total optimization iterations");
  cmd->add_option("--lambda-dssim", t.loss_lambda_dssim,
                  "D-SSIM mix weight in the loss (0 = pure L1)");
  cmd->add_option("--lr-position", t.lr_position, "Position lr (x scene extent, decayed)");
  cmd->add_option("--lr-position-final", t.lr_position_final, "Final position lr factor");
  cmd->add_option("--lr-scale", t.lr_scale, "Log-scale lr");
  cmd->add_option("--lr-rotation", t.lr_rotation, "Rotation lr");
  cmd->add_option("--lr-opacity", t.lr_opacity, "Opacity-logit lr");
  cmd->add_option("--lr-color", t.lr_color, "Color-coefficient lr");
  cmd->add_option("--seed", t.seed, "Seed for all stochastic choices");
  cmd->add_option("--threads", t.threads, "Worker count (never affects results)");
  cmd->add_option("--log-interval", t.log_interval, "Metrics row cadence, iterations");
  cmd->add_option("--checkpoint-interval", t.checkpoint_interval,
                  "Iteration-tagged checkpoint cadence (0 = final only)");
  cmd->add_flag("--random-background,!--no-random-background", t.random_background,
                "Randomize the background color per iteration");
  cmd->add_flag("--opacity-reset,!--no-opacity-reset", t.opacity_reset_enabled,
                "Enable periodic opacity resets");
  cmd->add_flag("--densify,!--no-densify", t.densify_enabled,
                "Enable adaptive density control");
  cmd->add_option("--background", opt.background, "Background color r g b")->expected(3);

  cmd->add_option("--tau-p", d.tau_p,
                  "Densify gradient threshold (baseline default 0.0002; "
                  "homodirectional runs use 0.0004 or 0.0008)");
  cmd->add_option("--tau-s", d.tau_s,
                  "Densify scale threshold, fraction of scene extent (default 0.01)");
  cmd->add_option("--strategy", opt.strategy, "Split criterion: baseline | abs")
      ->check(CLI::IsMember({"baseline", "abs"}));
  cmd->add_option("--split-count", d.split_count, "Children per split");
  cmd->add_option("--split-scale-divisor", d.split_scale_divisor, "Child scale divisor");
  cmd->add_option("--prune-opacity", d.prune_opacity, "Opacity prune threshold");
  cmd->add_option("--densify-interval", d.densify_interval, "Densify cadence, iterations");
  cmd->add_option("--densify-from", d.densify_from, "First densify iteration");
  cmd->add_option("--densify-until", d.densify_until, "Last densify iteration");
  cmd->add_option("--opacity-reset-interval", d.opacity_reset_interval,
                  "Opacity reset cadence, iterations");
  cmd->add_flag("--guard-caps,!--no-guard-caps", d.guard_caps,
                "Prune runaway primitives by world/screen size");
}

Options finalize(Options opt) {
  opt.train.background = Vec3(opt.background.at(0), opt.background.at(1), opt.background.at(2));
  opt.train.densify.strategy = parse_strategy(opt.strategy);
  return opt;
}

// The --config file is applied before flag parsing so flags win; find it by
// a manual scan.
void preload_config(Options& opt, int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") apply_config_file(opt, argv[i + 1]);
  }
}

struct LoadedViews {
  std::vector<CameraView> views;
  Scene scene;
};

LoadedViews load_scene(const std::string& cameras_path) {
  LoadedViews out;
  out.views = load_cameras(cameras_path);
  if (out.views.empty()) throw std::runtime_error("camera file lists no views");
  const fs::path base = fs::path(cameras_path).parent_path();
  for (const auto& view : out.views) {
    if (view.image_path.empty())
      throw std::runtime_error("camera entry missing image_path (id " +
                               std::to_string(view.id) + ")");
    fs::path img = view.image_path;
    if (img.is_relative()) img = base / img;
    out.scene.cameras.push_back(view.camera);
    out.scene.targets.push_back(load_image(img.string()));
  }
  return out;
}

void write_renders(const GaussianCloud& cloud, const std::vector<CameraView>& views,
                   const std::vector<std::size_t>& ids, const Options& opt,
                   const fs::path& dir) {
  fs::create_directories(dir);
  RenderOptions ropt;
  ropt.background = opt.train.background;
  ropt.threads = opt.train.threads;
  for (std::size_t v : ids) {
    const Camera& cam = views[v].camera;
    const auto projected = project(cloud, cam, ProjectOptions{0.3, opt.train.threads});
    const Image img = render(projected, cam.width, cam.height, ropt);
    const std::string stem = (dir / ("view_" + std::to_string(views[v].id))).string();
    save_png(img, stem + ".png");
    if (opt.write_pfm) save_pfm(img, stem + ".pfm");
  }
}

int cmd_train(Options opt, const std::string& cameras_path, const std::string& out_dir,
              const std::string& init_ply, int init_random) {
  opt = finalize(std::move(opt));
  opt.train.regime = Regime::view3d;
  LoadedViews loaded = load_scene(cameras_path);

  // Holdout split: every k-th view is reserved for final evaluation.
  Scene train_scene;
  std::vector<std::size_t> train_ids, holdout_ids;
  for (std::size_t v = 0; v < loaded.scene.cameras.size(); ++v) {
    if (opt.holdout_every > 0 && v % std::size_t(opt.holdout_every) == 0) {
      holdout_ids.push_back(v);
      continue;
    }
    train_ids.push_back(v);
    train_scene.cameras.push_back(loaded.scene.cameras[v]);
    train_scene.targets.push_back(loaded.scene.targets[v]);
  }
  if (train_scene.cameras.empty()) throw UsageError("holdout leaves no training views");

  GaussianCloud cloud;
  if (!init_ply.empty()) {
    cloud = load_ply(init_ply);
  } else {
    cloud = init_random_3d(train_scene.cameras, std::size_t(init_random), opt.train.seed,
                           opt.init_scale_frac, opt.sh_degree);
  }

  fs::create_directories(out_dir);
  TrainHooks hooks;
  hooks.on_checkpoint = [&](int iteration, const GaussianCloud& state) {
    checkpoint(state, (fs::path(out_dir) / ("point_cloud_" + std::to_string(iteration) + ".ply"))
                          .string());
  };
  TrainResult result = train(std::move(cloud), train_scene, opt.train, hooks);

  write_metrics_csv(result.log, (fs::path(out_dir) / "metrics.csv").string());
  checkpoint(result.cloud,
             (fs::path(out_dir) / ("point_cloud_" + std::to_string(opt.train.iterations) + ".ply"))
                 .string());
  write_renders(result.cloud, loaded.views, holdout_ids.empty() ? train_ids : holdout_ids, opt,
                fs::path(out_dir) / "renders");

  if (!result.log.empty()) {
    const auto& last = result.log.back();
    std::cout << "trained " << opt.train.iterations << " iterations: loss=" << last.loss
              << " psnr=" << last.psnr << " gaussians=" << last.num_gaussians << "\n";
  }
  return 0;
}

int cmd_fit2d(Options opt, const std::string& image_path, const std::string& out_dir,
              const std::string& init_ply) {
  opt = finalize(std::move(opt));
  opt.train.regime = Regime::image2d;
  Scene scene;
  scene.targets.push_back(load_image(image_path));

  GaussianCloud cloud = !init_ply.empty() ? load_ply(init_ply)
                        : opt.single_gaussian ? init_single_gaussian(scene.targets[0])
                                              : init_image_grid(scene.targets[0], opt.n_init);

  fs::create_directories(out_dir);
  TrainResult result = train(std::move(cloud), scene, opt.train);

  write_metrics_csv(result.log, (fs::path(out_dir) / "metrics.csv").string());
  checkpoint(result.cloud, (fs::path(out_dir) / "fit.ply").string());

  RenderOptions ropt;
  ropt.background = opt.train.background;
  ropt.threads = opt.train.threads;
  const Image& target = scene.targets[0];
  const auto projected = project_identity(result.cloud, target.width(), target.height(),
                                          ProjectOptions{0.3, opt.train.threads});
  const Image rendered = render(projected, target.width(), target.height(), ropt);
  save_png(rendered, (fs::path(out_dir) / "render.png").string());
  if (opt.write_pfm) save_pfm(rendered, (fs::path(out_dir) / "render.pfm").string());

  if (opt.diagnose) {
    const fs::path diag = fs::path(out_dir) / "diagnostics";
    fs::create_directories(diag);
    CollisionOptions copt;
    copt.threads = opt.train.threads;
    copt.out_dir = diag.string();
    const CollisionReport report =
        collision_report(result.cloud, scene, Regime::image2d, copt);
    write_collision_report_json(report, (diag / "collision_report.json").string());
  }

  std::cout << "fit " << result.cloud.size() << " gaussians: loss="
            << (result.log.empty() ? 0.0 : result.log.back().loss)
            << " psnr=" << psnr(rendered, target) << "\n";
  return 0;
}

int cmd_render(const Options& opt, const std::string& ply_path,
               const std::string& cameras_path, const std::string& out_dir) {
  const GaussianCloud cloud = load_ply(ply_path);
  const auto views = load_cameras(cameras_path);
  std::vector<std::size_t> ids(views.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  write_renders(cloud, views, ids, opt, out_dir);
  std::cout << "rendered " << views.size() << " views\n";
  return 0;
}

int cmd_diagnose(Options opt, const std::string& ply_path, const std::string& image_path,
                 const std::string& cameras_path, const std::string& out_dir, int top_k) {
  opt = finalize(std::move(opt));
  const GaussianCloud cloud = load_ply(ply_path);
  Scene scene;
  Regime regime;
  if (!image_path.empty()) {
    regime = Regime::image2d;
    scene.targets.push_back(load_image(image_path));
  } else if (!cameras_path.empty()) {
    regime = Regime::view3d;
    LoadedViews loaded = load_scene(cameras_path);
    scene = std::move(loaded.scene);
  } else {
    throw UsageError("diagnose needs --image or --cameras");
  }

  fs::create_directories(out_dir);
  CollisionOptions copt;
  copt.threads = opt.train.threads;
  copt.out_dir = out_dir;
  copt.top_k_sign_maps = top_k;
  copt.lambda_dssim = opt.train.loss_lambda_dssim;
  const CollisionReport report = collision_report(cloud, scene, regime, copt);
  write_collision_report_json(report, (fs::path(out_dir) / "collision_report.json").string());

  std::size_t collided = 0;
  for (const auto& row : report.rows) collided += row.rho < 0.5;
  std::cout << "analyzed " << report.rows.size() << " gaussians, " << collided
            << " with rho<0.5\n";
  return 0;
}

int cmd_sweep(Options opt, const std::string& image_path, const std::string& cameras_path,
              const std::string& init_ply, int init_random,
              const std::vector<Scalar>& tau_ps, const std::vector<Scalar>& tau_ss,
              const std::string& out_dir) {
  opt = finalize(std::move(opt));
  Scene scene;
  GaussianCloud init;
  if (!image_path.empty()) {
    opt.train.regime = Regime::image2d;
    scene.targets.push_back(load_image(image_path));
    init = !init_ply.empty() ? load_ply(init_ply)
                             : init_image_grid(scene.targets[0], opt.n_init);
  } else if (!cameras_path.empty()) {
    opt.train.regime = Regime::view3d;
    LoadedViews loaded = load_scene(cameras_path);
    scene = std::move(loaded.scene);
    init = !init_ply.empty()
               ? load_ply(init_ply)
               : init_random_3d(scene.cameras, std::size_t(init_random), opt.train.seed,
                                opt.init_scale_frac, opt.sh_degree);
  } else {
    throw UsageError("sweep needs --image or --cameras");
  }

  fs::create_directories(out_dir);
  const auto cells = threshold_sweep(scene, init, opt.train, opt.train.densify.strategy,
                                     tau_ps, tau_ss, out_dir);
  write_sweep_csv(cells, (fs::path(out_dir) / "sweep.csv").string());
  std::cout << "swept " << cells.size() << " cells\n";
  return 0;
}

int cmd_metrics(const std::string& a_path, const std::string& b_path) {
  const Image a = load_image(a_path);
  const Image b = load_image(b_path);
  std::cout << std::setprecision(12) << "psnr=" << psnr(a, b) << " ssim=" << ssim(a, b)
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"differentiable gaussian splatting with homodirectional densification"};
  app.require_subcommand(1);

  Options opt;
  opt.train.threads = 1;
  std::string config_path, cameras_path, image_path, ply_path, out_dir, init_ply;
  std::string metrics_a, metrics_b;
  int init_random = 64, top_k = 3;
  std::vector<Scalar> tau_ps, tau_ss;

  try {
    preload_config(opt, argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: io: " << e.what() << "\n";
    return 2;
  }

  auto* train_cmd = app.add_subcommand("train", "Optimize a cloud against posed views");
  train_cmd->add_option("--config", config_path, "Flat json config file");
  train_cmd->add_option("--cameras", cameras_path, "Camera json (with image_path entries)")
      ->required();
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  train_cmd->add_option("--init-ply", init_ply, "Initial cloud checkpoint");
  train_cmd->add_option("--init-random", init_random, "Random-init gaussian count");
  train_cmd->add_option("--init-scale-frac", opt.init_scale_frac,
                        "Random-init scale, fraction of extent");
  train_cmd->add_option("--sh-degree", opt.sh_degree, "SH degree for random init")
      ->check(CLI::Range(0, 3));
  train_cmd->add_option("--holdout-every", opt.holdout_every,
                        "Hold out every k-th view for final renders (0 = none)");
  train_cmd->add_flag("--pfm", opt.write_pfm, "Also write float renders");
  add_train_flags(train_cmd, opt);

  auto* fit_cmd = app.add_subcommand("fit2d", "Fit gaussians to a single image");
  fit_cmd->add_option("--config", config_path, "Flat json config file");
  fit_cmd->add_option("--image", image_path, "Target image (png or pfm)")->required();
  fit_cmd->add_option("--out", out_dir, "Output directory")->required();
  fit_cmd->add_option("--n-init", opt.n_init, "Stratified-grid initialization count");
  fit_cmd->add_option("--init-ply", init_ply, "Initial cloud checkpoint");
  fit_cmd->add_flag("--single-gaussian", opt.single_gaussian,
                    "Initialize with one centered gaussian");
  fit_cmd->add_flag("--diagnose", opt.diagnose, "Emit collision report and sign maps");
  fit_cmd->add_flag("--pfm", opt.write_pfm, "Also write float renders");
  add_train_flags(fit_cmd, opt);

  auto* render_cmd = app.add_subcommand("render", "Render a checkpoint from posed cameras");
  render_cmd->add_option("--ply", ply_path, "Cloud checkpoint")->required();
  render_cmd->add_option("--cameras", cameras_path, "Camera json")->required();
  render_cmd->add_option("--out", out_dir, "Output directory")->required();
  render_cmd->add_option("--threads", opt.train.threads, "Worker count");
  render_cmd->add_option("--background", opt.background, "Background color r g b")->expected(3);
  render_cmd->add_flag("--pfm", opt.write_pfm, "Also write float renders");

  auto* diag_cmd = app.add_subcommand("diagnose", "Collision report for a checkpoint");
  diag_cmd->add_option("--ply", ply_path, "Cloud checkpoint")->required();
  diag_cmd->add_option("--image", image_path, "2d target image");
  diag_cmd->add_option("--cameras", cameras_path, "Camera json (first view analyzed)");
  diag_cmd->add_option("--out", out_dir, "Output directory")->required();
  diag_cmd->add_option("--top-k", top_k, "Sign-map exports for the k largest footprints");
  diag_cmd->add_option("--lambda-dssim", opt.train.loss_lambda_dssim, "Loss mix weight");
  diag_cmd->add_option("--threads", opt.train.threads, "Worker count");

  auto* sweep_cmd = app.add_subcommand("sweep", "Threshold sweep over tau_p x tau_s");
  sweep_cmd->add_option("--config", config_path, "Flat json config file");
  sweep_cmd->add_option("--image", image_path, "2d target image");
  sweep_cmd->add_option("--cameras", cameras_path, "Camera json");
  sweep_cmd->add_option("--init-ply", init_ply, "Initial cloud checkpoint");
  sweep_cmd->add_option("--init-random", init_random, "Random-init count (3d)");
  sweep_cmd->add_option("--n-init", opt.n_init, "Grid-init count (2d)");
  sweep_cmd->add_option("--tau-p-list", tau_ps, "Gradient thresholds to sweep")->required();
  sweep_cmd->add_option("--tau-s-list", tau_ss, "Scale thresholds to sweep")->required();
  sweep_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_train_flags(sweep_cmd, opt);

  auto* metrics_cmd = app.add_subcommand("metrics", "PSNR/SSIM between two images");
  metrics_cmd->add_option("--a", metrics_a, "First image")->required();
  metrics_cmd->add_option("--b", metrics_b, "Second image")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed())
      return cmd_train(opt, cameras_path, out_dir, init_ply, init_random);
    if (fit_cmd->parsed()) return cmd_fit2d(opt, image_path, out_dir, init_ply);
    if (render_cmd->parsed()) return cmd_render(opt, ply_path, cameras_path, out_dir);
    if (diag_cmd->parsed())
      return cmd_diagnose(opt, ply_path, image_path, cameras_path, out_dir, top_k);
    if (sweep_cmd->parsed())
      return cmd_sweep(opt, image_path, cameras_path, init_ply, init_random, tau_ps, tau_ss,
                       out_dir);
    if (metrics_cmd->parsed()) return cmd_metrics(metrics_a, metrics_b);
    throw UsageError("no subcommand");
  } catch (const UsageError& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: usage: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    if (what.find("non-finite") != std::string::npos) {
      std::cerr << "error: numeric: " << what << "\n";
      return 3;
    }
    std::cerr << "error: io: " << what << "\n";
    return 2;
  }
}
