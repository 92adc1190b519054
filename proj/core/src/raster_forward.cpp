#include "absplat/raster.hpp"

#include "absplat/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace absplat {

std::vector<std::uint32_t> blend_order(std::span<const ProjectedGaussian> projected) {
  std::vector<std::uint32_t> order(projected.size());
  std::iota(order.begin(), order.end(), 0u);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (projected[a].depth != projected[b].depth) return projected[a].depth < projected[b].depth;
    return projected[a].source < projected[b].source;
  });
  return order;
}

namespace {

struct TileGrid {
  int tile_size, tiles_x, tiles_y;
};

// Tile index ranges overlapped by a footprint square, with half-pixel slack.
void tile_span(const ProjectedGaussian& g, const TileGrid& grid, int width, int height,
               int& tx0, int& tx1, int& ty0, int& ty1) {
  const Scalar r = g.radius;
  const int x0 = int(std::floor(g.mean2d.x() - r));
  const int x1 = int(std::ceil(g.mean2d.x() + r));
  const int y0 = int(std::floor(g.mean2d.y() - r));
  const int y1 = int(std::ceil(g.mean2d.y() + r));
  tx0 = std::clamp(x0 / grid.tile_size, 0, grid.tiles_x - 1);
  tx1 = std::clamp(x1 / grid.tile_size, 0, grid.tiles_x - 1);
  ty0 = std::clamp(y0 / grid.tile_size, 0, grid.tiles_y - 1);
  ty1 = std::clamp(y1 / grid.tile_size, 0, grid.tiles_y - 1);
  if (x1 < 0 || x0 >= width || y1 < 0 || y0 >= height) {
    // Footprint entirely outside; encode an empty span.
    tx0 = 1;
    tx1 = 0;
  }
}

void bin_tiles(std::span<const ProjectedGaussian> projected,
               const std::vector<std::uint32_t>& order, const TileGrid& grid, int width,
               int height, RenderArtifacts& art) {
  const std::size_t n_tiles = std::size_t(grid.tiles_x) * grid.tiles_y;
  std::vector<std::uint32_t> counts(n_tiles, 0);
  for (std::uint32_t idx : order) {
    int tx0, tx1, ty0, ty1;
    tile_span(projected[idx], grid, width, height, tx0, tx1, ty0, ty1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx) ++counts[std::size_t(ty) * grid.tiles_x + tx];
  }

  art.tile_ranges.resize(n_tiles);
  std::uint32_t offset = 0;
  for (std::size_t t = 0; t < n_tiles; ++t) {
    art.tile_ranges[t] = {offset, offset + counts[t]};
    offset += counts[t];
  }
  art.contributors.resize(offset);

  std::vector<std::uint32_t> cursor(n_tiles);
  for (std::size_t t = 0; t < n_tiles; ++t) cursor[t] = art.tile_ranges[t].first;
  // Filling in global depth order keeps each tile's span depth-sorted.
  for (std::uint32_t idx : order) {
    int tx0, tx1, ty0, ty1;
    tile_span(projected[idx], grid, width, height, tx0, tx1, ty0, ty1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        art.contributors[cursor[std::size_t(ty) * grid.tiles_x + tx]++] = idx;
  }
}

// One pixel of front-to-back blending; shared verbatim by the tiled and
// naive paths so they agree bitwise.
template <typename ContributorRange>
void blend_pixel(std::span<const ProjectedGaussian> projected, const ContributorRange& range,
                 Scalar px, Scalar py, const RenderOptions& opt, Vec3& accum, Scalar& T,
                 Scalar& wsum, std::uint32_t& count) {
  accum.setZero();
  T = 1.0;
  wsum = 0.0;
  count = 0;
  for (std::uint32_t idx : range) {
    const ProjectedGaussian& g = projected[idx];
    const Scalar dx = px - g.mean2d.x();
    const Scalar dy = py - g.mean2d.y();
    const Scalar q = g.conic_a * dx * dx + 2.0 * g.conic_b * dx * dy + g.conic_c * dy * dy;
    if (q < 0.0) continue;
    const Scalar raw_alpha = g.opacity * std::exp(-0.5 * q);
    if (raw_alpha < opt.alpha_skip) continue;
    const Scalar alpha = std::min(raw_alpha, opt.alpha_clamp);
    const Scalar next_T = T * (1.0 - alpha);
    if (next_T < opt.min_transmittance) break;  // would exhaust the pixel
    const Scalar w = alpha * T;
    accum += w * g.rgb;
    wsum += w;
    T = next_T;
    ++count;
  }
}

}  // namespace

Image render(std::span<const ProjectedGaussian> projected, int width, int height,
             const RenderOptions& options, RenderArtifacts* artifacts) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("empty viewport");

  const TileGrid grid{options.tile_size, (width + options.tile_size - 1) / options.tile_size,
                      (height + options.tile_size - 1) / options.tile_size};

  RenderArtifacts local;
  RenderArtifacts& art = artifacts ? *artifacts : local;
  art.width = width;
  art.height = height;
  art.tile_size = grid.tile_size;
  art.tiles_x = grid.tiles_x;
  art.tiles_y = grid.tiles_y;
  art.n_projected = projected.size();
  art.final_transmittance.assign(std::size_t(width) * height, 1.0);
  art.contributor_count.assign(std::size_t(width) * height, 0);
  art.weight_sum.assign(std::size_t(width) * height, 0.0);

  const std::vector<std::uint32_t> order = blend_order(projected);
  bin_tiles(projected, order, grid, width, height, art);

  Image image(width, height);
  const std::size_t n_tiles = std::size_t(grid.tiles_x) * grid.tiles_y;
  parallel_for(n_tiles, options.threads, [&](std::size_t t) {
    const int tx = int(t) % grid.tiles_x;
    const int ty = int(t) / grid.tiles_x;
    const auto [begin, end] = art.tile_ranges[t];
    const std::span<const std::uint32_t> span{art.contributors.data() + begin,
                                              std::size_t(end - begin)};
    const int x0 = tx * grid.tile_size, x1 = std::min(width, x0 + grid.tile_size);
    const int y0 = ty * grid.tile_size, y1 = std::min(height, y0 + grid.tile_size);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) {
        Vec3 accum;
        Scalar T, wsum;
        std::uint32_t count;
        blend_pixel(projected, span, x + 0.5, y + 0.5, options, accum, T, wsum, count);
        image.set_pixel(x, y, accum + T * options.background);
        const std::size_t pix = std::size_t(y) * width + x;
        art.final_transmittance[pix] = T;
        art.contributor_count[pix] = count;
        art.weight_sum[pix] = wsum;
      }
    }
  });
  return image;
}

Image render_naive(std::span<const ProjectedGaussian> projected, int width, int height,
                   const RenderOptions& options, NaiveStats* stats) {
  if (width <= 0 || height <= 0) throw std::invalid_argument("empty viewport");
  const std::vector<std::uint32_t> order = blend_order(projected);

  if (stats) {
    stats->final_transmittance.assign(std::size_t(width) * height, 1.0);
    stats->weight_sum.assign(std::size_t(width) * height, 0.0);
    stats->contributor_count.assign(std::size_t(width) * height, 0);
  }

  Image image(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      Vec3 accum;
      Scalar T, wsum;
      std::uint32_t count;
      blend_pixel(projected, order, x + 0.5, y + 0.5, options, accum, T, wsum, count);
      image.set_pixel(x, y, accum + T * options.background);
      if (stats) {
        const std::size_t pix = std::size_t(y) * width + x;
        stats->final_transmittance[pix] = T;
        stats->weight_sum[pix] = wsum;
        stats->contributor_count[pix] = count;
      }
    }
  }
  return image;
}

}  // namespace absplat
