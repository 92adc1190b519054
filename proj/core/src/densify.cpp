#include "absplat/densify.hpp"

#include "absplat/raster.hpp"
#include "absplat/rng.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace absplat {

const char* strategy_name(Strategy s) { return s == Strategy::abs ? "abs" : "baseline"; }

Strategy parse_strategy(const std::string& name) {
  if (name == "abs") return Strategy::abs;
  if (name == "baseline") return Strategy::baseline;
  throw std::invalid_argument("unknown strategy: " + name);
}

void DensifyConfig::validate() const {
  if (tau_p <= 0 || tau_s <= 0) throw std::invalid_argument("thresholds must be positive");
  if (split_count < 2) throw std::invalid_argument("split_count must be at least 2");
  if (split_scale_divisor <= 1.0)
    throw std::invalid_argument("split_scale_divisor must exceed 1");
}

SelectionReport select(const GaussianCloud& cloud, const DensifyConfig& config,
                       const DensifyContext& ctx) {
  config.validate();
  const std::size_t n = cloud.size();
  SelectionReport report;
  report.n_before = n;
  report.split_criterion_values.assign(n, 0.0);

  const Scalar scale_threshold = config.tau_s * ctx.scene_extent;
  for (std::size_t i = 0; i < n; ++i) {
    const int views = cloud.ledger.view_count[i];
    const Scalar opacity = sigmoid(cloud.opacity_logits[i]);
    const Scalar world_size = cloud.max_scale(i);

    bool pruned = opacity < config.prune_opacity;
    if (!pruned && ctx.apply_guards && config.guard_caps) {
      if (world_size > config.guard_world_frac * ctx.scene_extent) pruned = true;
      if (ctx.screen_radius_cap > 0.0 &&
          cloud.ledger.max_screen_radius[i] > ctx.screen_radius_cap)
        pruned = true;
    }
    if (pruned) {
      report.pruned_ids.push_back(std::uint32_t(i));
      continue;
    }

    if (views <= 0) continue;
    const Scalar avg_signed = cloud.ledger.signed_accum[i] / views;
    const Scalar avg_abs = cloud.ledger.homodir_accum[i] / views;
    const Scalar criterion = config.strategy == Strategy::abs ? avg_abs : avg_signed;
    report.split_criterion_values[i] = criterion;

    const bool large = world_size > scale_threshold;
    if (large) {
      if (criterion > config.tau_p) report.split_ids.push_back(std::uint32_t(i));
    } else {
      // Clone keeps the signed criterion under both strategies.
      if (avg_signed > config.tau_p) report.clone_ids.push_back(std::uint32_t(i));
    }
  }
  return report;
}

namespace {

struct RowCopier {
  GaussianCloud& dst;
  const GaussianCloud& src;
  std::size_t k;  // coeffs per gaussian

  void append(std::size_t from) {
    dst.positions.push_back(src.positions[from]);
    dst.log_scales.push_back(src.log_scales[from]);
    dst.rotations.push_back(src.rotations[from]);
    dst.opacity_logits.push_back(src.opacity_logits[from]);
    const Scalar* c = src.color_coeffs.data() + from * k;
    dst.color_coeffs.insert(dst.color_coeffs.end(), c, c + k);
  }
};

}  // namespace

ApplyResult apply(GaussianCloud& cloud, const SelectionReport& report,
                  const DensifyConfig& config, std::uint64_t seed) {
  if (report.n_before != cloud.size()) throw std::runtime_error("stale selection report");
  const std::size_t n = cloud.size();
  const std::size_t k = std::size_t(cloud.coeffs_per_gaussian());

  std::vector<std::uint8_t> is_split(n, 0), is_pruned(n, 0);
  for (auto i : report.split_ids) is_split[i] = 1;
  for (auto i : report.pruned_ids) is_pruned[i] = 1;

  GaussianCloud next;
  next.sh_degree = cloud.sh_degree;
  ApplyResult result;
  RowCopier copy{next, cloud, k};

  // Survivors first in original order, then clones, then split children;
  // all appended deterministically in id order.
  for (std::size_t i = 0; i < n; ++i) {
    if (is_pruned[i] || is_split[i]) continue;
    copy.append(i);
    result.source_row.push_back(std::int32_t(i));
  }
  for (auto i : report.clone_ids) {
    if (is_pruned[i] || is_split[i]) continue;
    copy.append(i);
    result.source_row.push_back(-1);
    ++result.n_cloned;
  }

  Rng rng(seed);
  const Scalar log_divisor = std::log(config.split_scale_divisor);
  for (auto i : report.split_ids) {
    if (is_pruned[i]) continue;
    const Mat3 rot = quat_to_rotation(cloud.rotations[i]);
    const Vec3 scales = cloud.log_scales[i].array().exp();
    for (int child = 0; child < config.split_count; ++child) {
      const Vec3 z(rng.normal(), rng.normal(), rng.normal());
      // Sample from the parent's density: mu + R S z.
      const Vec3 offset = rot * scales.cwiseProduct(z);
      copy.append(i);
      next.positions.back() = cloud.positions[i] + offset;
      next.log_scales.back() = cloud.log_scales[i].array() - log_divisor;
      result.source_row.push_back(-1);
    }
    ++result.n_split;
  }
  result.n_pruned = report.pruned_ids.size();

  next.ledger.resize(next.positions.size());
  cloud = std::move(next);
  return result;
}

namespace {

Image render_mask(const SelectionReport& report, const GaussianCloud& cloud,
                  std::vector<ProjectedGaussian> projected, int width, int height) {
  std::vector<std::uint8_t> selected(cloud.size(), 0);
  for (auto i : report.split_ids) selected[i] = 1;
  for (auto i : report.clone_ids) selected[i] = 1;
  for (auto& p : projected) {
    if (selected[std::size_t(p.source)])
      p.rgb = Vec3::Ones();
    else
      p.rgb *= 0.3;
  }
  return render(projected, width, height);
}

}  // namespace

Image selection_mask(const SelectionReport& report, const GaussianCloud& cloud,
                     const Camera& camera) {
  return render_mask(report, cloud, project(cloud, camera), camera.width, camera.height);
}

Image selection_mask_identity(const SelectionReport& report, const GaussianCloud& cloud,
                              int width, int height) {
  return render_mask(report, cloud, project_identity(cloud, width, height), width, height);
}

void save_selection_report_json(const SelectionReport& report, const std::string& path) {
  nlohmann::json doc;
  doc["n_before"] = report.n_before;
  doc["split_ids"] = report.split_ids;
  doc["clone_ids"] = report.clone_ids;
  doc["pruned_ids"] = report.pruned_ids;
  doc["split_criterion_values"] = report.split_criterion_values;
  doc["counts"] = {{"split", report.split_ids.size()},
                   {"clone", report.clone_ids.size()},
                   {"pruned", report.pruned_ids.size()}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write selection report: " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace absplat
