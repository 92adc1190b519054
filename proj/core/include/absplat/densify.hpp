#pragma once

#include "absplat/cloud.hpp"
#include "absplat/image.hpp"
#include "absplat/projection.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace absplat {

enum class Strategy { baseline, abs };

const char* strategy_name(Strategy s);
Strategy parse_strategy(const std::string& name);

struct DensifyConfig {
  Scalar tau_p = 0.0002;  // gradient threshold on the per-view average norm
  Scalar tau_s = 0.01;    // scale threshold, fraction of scene extent
  Strategy strategy = Strategy::baseline;  // drives the split decision only
  int split_count = 2;
  Scalar split_scale_divisor = 1.6;
  Scalar prune_opacity = 0.005;
  int densify_interval = 100;
  int densify_from = 500;
  int densify_until = 15000;
  int opacity_reset_interval = 3000;
  bool guard_caps = true;
  Scalar guard_world_frac = 0.1;   // prune when world size exceeds this x extent
  Scalar guard_screen_frac = 0.2;  // ... or screen radius exceeds this x image

  void validate() const;
};

// Environment a selection runs in; resolved by the caller (trainer/tests).
struct DensifyContext {
  Scalar scene_extent = 1.0;        // world units (image2d: pixel diagonal)
  Scalar screen_radius_cap = 0.0;   // px; 0 disables the screen guard
  bool apply_guards = false;        // guard caps active this step
};

struct SelectionReport {
  std::vector<std::uint32_t> split_ids;
  std::vector<std::uint32_t> clone_ids;
  std::vector<std::uint32_t> pruned_ids;
  // Per-Gaussian average gradient that drove the split decision (the
  // homodirectional average under Strategy::abs, signed otherwise).
  std::vector<Scalar> split_criterion_values;
  std::size_t n_before = 0;

  std::size_t selected() const { return split_ids.size() + clone_ids.size(); }
};

// Pure read of the ledger. Clone: avg signed gradient > tau_p and max world
// scale <= tau_s * extent (always the signed criterion). Split: the
// strategy's average gradient > tau_p and max world scale > tau_s * extent.
// Gaussians with zero view count are never selected.
SelectionReport select(const GaussianCloud& cloud, const DensifyConfig& config,
                       const DensifyContext& ctx);

struct ApplyResult {
  // For each row of the new cloud, the source row in the old cloud, or -1
  // for fresh rows (clones and split children). Drives optimizer surgery.
  std::vector<std::int32_t> source_row;
  std::size_t n_cloned = 0, n_split = 0, n_pruned = 0;
};

// Executes the report: clones duplicate in place, splits replace the parent
// with split_count children sampled from its density (seeded, reproducible)
// at scales divided by split_scale_divisor, prunes remove rows. Ledger is
// reset afterwards.
ApplyResult apply(GaussianCloud& cloud, const SelectionReport& report,
                  const DensifyConfig& config, std::uint64_t seed);

// Comparison render: selected Gaussians forced white, the rest dimmed to
// 30%, black background.
Image selection_mask(const SelectionReport& report, const GaussianCloud& cloud,
                     const Camera& camera);
Image selection_mask_identity(const SelectionReport& report, const GaussianCloud& cloud,
                              int width, int height);

void save_selection_report_json(const SelectionReport& report, const std::string& path);

}  // namespace absplat
