#include "absplat/diagnostics.hpp"

#include "absplat/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace absplat {

namespace {

constexpr int kRhoBins = 10;
constexpr int kFootprintBins = 21;  // log2 bins: 1, 2-3, 4-7, ...

int footprint_bin(std::uint32_t m) {
  int bin = 0;
  while (m > 1 && bin < kFootprintBins - 1) {
    m >>= 1;
    ++bin;
  }
  return bin;
}

Scalar ratio(Scalar num, Scalar den) { return den > 0.0 ? num / den : 1.0; }

}  // namespace

CollisionReport collision_report(const GaussianCloud& cloud, const Scene& scene,
                                 Regime regime, const CollisionOptions& options) {
  if (scene.targets.empty()) throw std::invalid_argument("no view to analyze");
  const Image& target = scene.targets.front();

  ProjectOptions popt;
  popt.threads = options.threads;
  RenderOptions ropt;
  ropt.threads = options.threads;

  std::vector<ProjectedGaussian> projected;
  if (regime == Regime::image2d) {
    projected = project_identity(cloud, target.width(), target.height(), popt);
  } else {
    if (scene.cameras.empty()) throw std::invalid_argument("no camera to analyze");
    projected = project(cloud, scene.cameras.front(), popt);
  }

  RenderArtifacts artifacts;
  const Image rendered = render(projected, target.width(), target.height(), ropt, &artifacts);
  const LossResult L = loss(rendered, target, options.lambda_dssim);

  BackwardOptions bopt;
  bopt.threads = options.threads;
  const ViewGradients grads =
      regime == Regime::image2d
          ? backward_identity(cloud, projected, artifacts, L.grad, ropt, bopt)
          : backward(cloud, projected, artifacts, L.grad, scene.cameras.front(), ropt, bopt);

  CollisionReport report;
  report.histogram.assign(kFootprintBins, std::vector<int>(kRhoBins, 0));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!grads.touched[i]) continue;
    CollisionRow row;
    row.id = GaussianId(i);
    row.footprint = grads.pixel_count[i];
    row.g_norm = grads.signed_view2d[i].norm();
    row.ghat_norm = grads.homodir_view2d[i].norm();
    row.rho = ratio(row.g_norm, row.ghat_norm);
    row.rho_x = ratio(std::abs(grads.signed_view2d[i].x()), grads.homodir_view2d[i].x());
    row.rho_y = ratio(std::abs(grads.signed_view2d[i].y()), grads.homodir_view2d[i].y());
    const int rbin = std::min(kRhoBins - 1, int(row.rho * kRhoBins));
    report.histogram[footprint_bin(row.footprint)][rbin] += 1;
    report.rows.push_back(row);
  }

  if (!options.out_dir.empty() && options.top_k_sign_maps > 0) {
    std::vector<std::size_t> order(report.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (report.rows[a].footprint != report.rows[b].footprint)
        return report.rows[a].footprint > report.rows[b].footprint;
      return report.rows[a].id < report.rows[b].id;
    });
    const int k = std::min<int>(options.top_k_sign_maps, int(order.size()));
    for (int rank = 0; rank < k; ++rank) {
      const GaussianId id = report.rows[order[std::size_t(rank)]].id;
      const PixelGradientMap map =
          capture_pixel_gradients(projected, artifacts, L.grad, id, ropt);
      const std::string stem = options.out_dir + "/gaussian_" + std::to_string(id);
      save_pfm_gray(map.gx, map.width, map.height, stem + "_grad_x.pfm");
      save_pfm_gray(map.gy, map.width, map.height, stem + "_grad_y.pfm");
      save_sign_map(map.gx, map.width, map.height, stem + "_sign_x.png");
      save_sign_map(map.gy, map.width, map.height, stem + "_sign_y.png");
    }
  }
  return report;
}

void write_collision_report_json(const CollisionReport& report, const std::string& path) {
  nlohmann::json doc;
  auto& rows = doc["gaussians"] = nlohmann::json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"id", r.id},
                    {"footprint_pixels", r.footprint},
                    {"signed_norm", r.g_norm},
                    {"homodir_norm", r.ghat_norm},
                    {"rho", r.rho},
                    {"rho_x", r.rho_x},
                    {"rho_y", r.rho_y}});
  }
  doc["rho_vs_footprint_histogram"] = report.histogram;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write collision report: " + path);
  out << doc.dump(2) << "\n";
}

std::size_t bytes_per_gaussian(int sh_degree) {
  // positions 3 + scales 3 + rotation 4 + opacity 1 + colors 3(L+1)^2,
  // float32 each.
  return 4u * (11u + 3u * std::size_t(sh_degree + 1) * std::size_t(sh_degree + 1));
}

std::vector<SweepCell> threshold_sweep(const Scene& scene, const GaussianCloud& init,
                                       const TrainConfig& base, Strategy strategy,
                                       const std::vector<Scalar>& tau_p_list,
                                       const std::vector<Scalar>& tau_s_list,
                                       const std::string& out_dir) {
  std::vector<SweepCell> cells;
  for (const Scalar tau_s : tau_s_list) {
    for (const Scalar tau_p : tau_p_list) {
      TrainConfig config = base;
      config.densify.strategy = strategy;
      config.densify.tau_p = tau_p;
      config.densify.tau_s = tau_s;

      SweepCell cell;
      cell.tau_p = tau_p;
      cell.tau_s = tau_s;
      cell.strategy = strategy;

      bool mask_written = false;
      TrainHooks hooks;
      hooks.on_densify = [&](const DensifyEvent& event) {
        cell.selected += event.report->selected();
        if (!out_dir.empty() && !mask_written) {
          std::ostringstream name;
          name << out_dir << "/mask_" << strategy_name(strategy) << "_p" << tau_p << "_s"
               << tau_s << ".png";
          Image mask;
          if (config.regime == Regime::image2d) {
            mask = selection_mask_identity(*event.report, *event.cloud,
                                           scene.targets.front().width(),
                                           scene.targets.front().height());
          } else {
            mask = selection_mask(*event.report, *event.cloud, scene.cameras.front());
          }
          save_png(mask, name.str());
          mask_written = true;
        }
      };

      TrainResult result = train(init, scene, config, hooks);
      cell.final_n = result.cloud.size();
      cell.bytes = cell.final_n * bytes_per_gaussian(result.cloud.sh_degree);

      // Final quality averaged over the scene's views.
      Scalar psnr_sum = 0.0, ssim_sum = 0.0;
      const std::size_t n_views = config.regime == Regime::image2d ? 1 : scene.targets.size();
      for (std::size_t v = 0; v < n_views; ++v) {
        std::vector<ProjectedGaussian> projected;
        if (config.regime == Regime::image2d) {
          projected = project_identity(result.cloud, scene.targets[v].width(),
                                       scene.targets[v].height());
        } else {
          projected = project(result.cloud, scene.cameras[v]);
        }
        RenderOptions ropt;
        ropt.background = config.background;
        const Image img =
            render(projected, scene.targets[v].width(), scene.targets[v].height(), ropt);
        psnr_sum += psnr(img, scene.targets[v]);
        ssim_sum += ssim(img, scene.targets[v]);
      }
      cell.psnr = psnr_sum / Scalar(n_views);
      cell.ssim = ssim_sum / Scalar(n_views);
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_sweep_csv(const std::vector<SweepCell>& cells, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write sweep csv: " + path);
  out << "tau_p,tau_s,strategy,selected,final_n,psnr,ssim,bytes\n";
  out << std::setprecision(17);
  for (const auto& c : cells) {
    out << c.tau_p << ',' << c.tau_s << ',' << strategy_name(c.strategy) << ',' << c.selected
        << ',' << c.final_n << ',' << c.psnr << ',' << c.ssim << ',' << c.bytes << '\n';
  }
}

}  // namespace absplat
