#include "bevgrid/projection.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bevgrid/parallel.hpp"
#include "bevgrid/pointcloud_io.hpp"

namespace bevgrid {
namespace {

// Floating-point slack, in pixels, for points that land a hair below a
// window's origin after subtraction.
constexpr double kSliverPx = 1e-6;
// Relative slack when counting cells/windows so an extent of exactly k strides
// is not split into k + 1.
constexpr double kCountSlack = 1e-9;

std::uint32_t span_count(double extent, double side) {
  const double n = std::ceil(extent / side - kCountSlack);
  return static_cast<std::uint32_t>(std::max(1.0, n));
}

std::optional<int> axis_pixel(double coord, double origin, double scale, int size, bool clamp) {
  const double raw = (coord - origin) / scale;
  if (!std::isfinite(raw)) return std::nullopt;
  const double f = std::floor(raw);
  if (f < 0.0) {
    if (f == -1.0 && raw > -kSliverPx) return 0;
    return std::nullopt;
  }
  if (f >= static_cast<double>(size)) {
    if (clamp && f == static_cast<double>(size)) return size - 1;
    return std::nullopt;
  }
  return static_cast<int>(f);
}

std::int64_t floor_index(double v) {
  if (!std::isfinite(v)) return 0;
  return static_cast<std::int64_t>(std::floor(std::clamp(v, -1e15, 1e15)));
}

}  // namespace

void ProjectionConfig::validate() const {
  if (!(g_scale > 0.0) || !std::isfinite(g_scale)) throw ConfigError("g_scale must be positive");
  if (!(g_size > 0.0) || !std::isfinite(g_size)) throw ConfigError("g_size must be positive");
  if (!(g_step > 0.0) || g_step > g_size) {
    throw ConfigError("g_step must satisfy 0 < g_step <= g_size");
  }
  if (!(cell_side >= g_size) || !std::isfinite(cell_side)) {
    throw ConfigError("cell_side must be at least g_size");
  }
  if (kernel < 3 || kernel % 2 == 0) throw ConfigError("kernel must be odd and at least 3");
  if (completion_iterations < 0) throw ConfigError("completion iterations must be non-negative");
  const double px = std::round(g_size / g_scale);
  if (px < 1.0) throw ConfigError("g_size / g_scale must round to at least one pixel");
  if (px > 1e6) throw ConfigError("g_size / g_scale exceeds one million pixels per side");
}

int ProjectionConfig::pixels_per_side() const {
  return static_cast<int>(std::round(g_size / g_scale));
}

std::uint32_t GridLayout::cell_of(double x, double y) const {
  const auto col = std::clamp<std::int64_t>(floor_index((x - bounds.min_x) / cell_side), 0,
                                            static_cast<std::int64_t>(cols) - 1);
  const auto row = std::clamp<std::int64_t>(floor_index((y - bounds.min_y) / cell_side), 0,
                                            static_cast<std::int64_t>(rows) - 1);
  return static_cast<std::uint32_t>(row * cols + col);
}

GridLayout partition_grid(const Bounds2& bounds, double cell_side) {
  if (!(cell_side > 0.0)) throw ConfigError("cell side must be positive");
  if (bounds.empty() || !(bounds.width() > 0.0) || !(bounds.height() > 0.0)) {
    throw Error("cannot partition zero-area bounds");
  }
  GridLayout grid;
  grid.bounds = bounds;
  grid.cell_side = cell_side;
  grid.cols = span_count(bounds.width(), cell_side);
  grid.rows = span_count(bounds.height(), cell_side);
  grid.cells.reserve(static_cast<std::size_t>(grid.cols) * grid.rows);
  for (std::uint32_t r = 0; r < grid.rows; ++r) {
    for (std::uint32_t c = 0; c < grid.cols; ++c) {
      GridCell cell;
      cell.id = r * grid.cols + c;
      cell.col = c;
      cell.row = r;
      cell.last_col = c + 1 == grid.cols;
      cell.last_row = r + 1 == grid.rows;
      cell.x0 = bounds.min_x + c * cell_side;
      cell.y0 = bounds.min_y + r * cell_side;
      cell.x1 = cell.last_col ? bounds.max_x : cell.x0 + cell_side;
      cell.y1 = cell.last_row ? bounds.max_y : cell.y0 + cell_side;
      grid.cells.push_back(cell);
    }
  }
  return grid;
}

std::vector<WindowMeta> windows(const GridCell& cell, const ProjectionConfig& config,
                                std::uint32_t first_id) {
  config.validate();
  const std::uint32_t nx = span_count(cell.x1 - cell.x0, config.g_step);
  const std::uint32_t ny = span_count(cell.y1 - cell.y0, config.g_step);
  const int px = config.pixels_per_side();

  std::vector<WindowMeta> out;
  out.reserve(static_cast<std::size_t>(nx) * ny);
  for (std::uint32_t kx = 0; kx < nx; ++kx) {
    for (std::uint32_t ky = 0; ky < ny; ++ky) {
      WindowMeta w;
      w.window_id = first_id + kx * ny + ky;
      w.cell_id = cell.id;
      w.win_x = kx;
      w.win_y = ky;
      w.x_s = cell.x0 + kx * config.g_step;
      w.y_s = cell.y0 + ky * config.g_step;
      w.width_px = px;
      w.height_px = px;
      w.g_scale = config.g_scale;
      w.clamp_x = cell.last_col && kx + 1 == nx;
      w.clamp_y = cell.last_row && ky + 1 == ny;
      out.push_back(w);
    }
  }
  return out;
}

std::string bundle_name(const WindowMeta& window) {
  return "cell" + std::to_string(window.cell_id) + "_win" + std::to_string(window.win_x) + "_" +
         std::to_string(window.win_y);
}

std::optional<PixelCoord> quantize(const Point& p, const WindowMeta& window) {
  const auto px = axis_pixel(p.x, window.x_s, window.g_scale, window.width_px, window.clamp_x);
  if (!px) return std::nullopt;
  const auto py = axis_pixel(p.y, window.y_s, window.g_scale, window.height_px, window.clamp_y);
  if (!py) return std::nullopt;
  return PixelCoord{*px, *py};
}

RasterSet RasterSet::nodata(int width, int height) {
  RasterSet r;
  r.width = width;
  r.height = height;
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  r.rgb.assign(n * 3, 0);
  r.alt.assign(n, 0.0);
  r.label.assign(n, kUnlabeled);
  r.mask.assign(n, 0);
  r.winner_index.assign(n, kNoWinner);
  return r;
}

std::size_t RasterSet::masked_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

RasterSet rasterize(std::span<const Point> points, WindowMeta& window) {
  RasterSet r = RasterSet::nodata(window.width_px, window.height_px);
  window.point_count = points.size();
  window.z_min = 0.0;
  window.z_max = 0.0;
  if (points.empty()) return r;

  double z_min = points.front().z;
  double z_max = points.front().z;
  for (const Point& p : points) {
    const auto q = quantize(p, window);
    if (!q) {
      throw Error("point " + std::to_string(p.index) + " does not fall in window " +
                  std::to_string(window.window_id));
    }
    z_min = std::min(z_min, p.z);
    z_max = std::max(z_max, p.z);

    const std::size_t i = r.pixel(q->px, q->py);
    const std::uint64_t current = r.winner_index[i];
    const bool wins = current == kNoWinner || p.z > r.alt[i] ||
                      (p.z == r.alt[i] && p.index < current);
    if (!wins) continue;
    r.winner_index[i] = p.index;
    r.alt[i] = p.z;
    r.rgb[3 * i] = p.r;
    r.rgb[3 * i + 1] = p.g;
    r.rgb[3 * i + 2] = p.b;
    r.label[i] = p.label;
    r.mask[i] = 1;
  }
  window.z_min = z_min;
  window.z_max = z_max;
  return r;
}

WindowLocator::WindowLocator(GridLayout grid, const ProjectionConfig& config)
    : grid_(std::move(grid)), config_(config) {
  config_.validate();
  first_window_.reserve(grid_.cells.size());
  for (const GridCell& cell : grid_.cells) {
    auto ws = bevgrid::windows(cell, config_, static_cast<std::uint32_t>(windows_.size()));
    first_window_.push_back(static_cast<std::uint32_t>(windows_.size()));
    nx_.push_back(ws.back().win_x + 1);
    ny_.push_back(ws.back().win_y + 1);
    windows_.insert(windows_.end(), ws.begin(), ws.end());
  }
}

void WindowLocator::candidates(const Point& p, std::uint32_t cell_id,
                               std::vector<std::uint32_t>& out) const {
  const GridCell& cell = grid_.cells[cell_id];
  const auto stride_range = [&](double offset, std::uint32_t n) {
    const auto lo = floor_index((offset - config_.g_size) / config_.g_step);
    const auto hi = floor_index(offset / config_.g_step) + 1;
    return std::pair{static_cast<std::uint32_t>(std::clamp<std::int64_t>(lo, 0, n - 1)),
                     static_cast<std::uint32_t>(std::clamp<std::int64_t>(hi, 0, n - 1))};
  };
  const auto [kx0, kx1] = stride_range(p.x - cell.x0, nx_[cell_id]);
  const auto [ky0, ky1] = stride_range(p.y - cell.y0, ny_[cell_id]);
  for (std::uint32_t kx = kx0; kx <= kx1; ++kx) {
    for (std::uint32_t ky = ky0; ky <= ky1; ++ky) {
      const std::uint32_t id = first_window_[cell_id] + kx * ny_[cell_id] + ky;
      if (quantize(p, windows_[id])) out.push_back(id);
    }
  }
}

void WindowLocator::members(const Point& p, std::vector<std::uint32_t>& out) const {
  out.clear();
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) return;
  const std::uint32_t home = grid_.cell_of(p.x, p.y);
  candidates(p, home, out);
  if (out.empty()) {
    // Points within rounding distance of a cell edge may belong to a
    // neighbouring cell's windows.
    const GridCell& cell = grid_.cells[home];
    for (std::int64_t dr = -1; dr <= 1 && out.empty(); ++dr) {
      for (std::int64_t dc = -1; dc <= 1 && out.empty(); ++dc) {
        const std::int64_t r = static_cast<std::int64_t>(cell.row) + dr;
        const std::int64_t c = static_cast<std::int64_t>(cell.col) + dc;
        if ((dr == 0 && dc == 0) || r < 0 || c < 0 || r >= grid_.rows || c >= grid_.cols) continue;
        candidates(p, static_cast<std::uint32_t>(r * grid_.cols + c), out);
      }
    }
  }
  if (out.size() > 1 && config_.tiles()) out.resize(1);
}

std::optional<std::uint32_t> WindowLocator::owner(const Point& p) const {
  thread_local std::vector<std::uint32_t> scratch;
  members(p, scratch);
  if (scratch.empty()) return std::nullopt;
  return scratch.front();
}

Bounds2 projection_bounds(const Bounds2& cloud_bounds, const ProjectionConfig& config) {
  Bounds2 b = cloud_bounds;
  if (b.empty()) return b;
  if (!(b.width() > 0.0)) b.max_x = b.min_x + config.g_scale;
  if (!(b.height() > 0.0)) b.max_y = b.min_y + config.g_scale;
  return b;
}

WindowLocator locator_for(const Manifest& manifest) {
  return WindowLocator(partition_grid(manifest.bounds, manifest.config.cell_side),
                       manifest.config);
}

namespace {

class Binner {
 public:
  Binner(const Bounds2& bounds, const ProjectionConfig& config, const ProjectOptions& options)
      : locator_(partition_grid(projection_bounds(bounds, config), config.cell_side), config) {
    const auto px = static_cast<std::uint64_t>(config.pixels_per_side());
    if (px * px > options.max_window_pixels) {
      const auto& ws = locator_.windows();
      std::string names;
      for (std::size_t i = 0; i < std::min<std::size_t>(ws.size(), 3); ++i) {
        names += (i ? ", " : "") + bundle_name(ws[i]);
      }
      throw Error(std::to_string(ws.size()) + " window(s) exceed the pixel cap of " +
                  std::to_string(options.max_window_pixels) + " (" + std::to_string(px * px) +
                  " pixels each): " + names + (ws.size() > 3 ? ", ..." : ""));
    }
    bins_.resize(locator_.windows().size());
  }

  void add(std::span<const Point> batch) {
    for (const Point& p : batch) {
      ++seen_;
      locator_.members(p, scratch_);
      if (scratch_.empty()) ++uncovered_;
      for (std::uint32_t id : scratch_) bins_[id].push_back(p);
    }
  }

  ProjectionResult finish(const ProjectionConfig& config, const ProjectOptions& options) {
    ProjectionResult result;
    result.manifest.config = config;
    result.manifest.bounds = locator_.grid().bounds;
    result.manifest.point_count = seen_;
    result.manifest.uncovered_points = uncovered_;

    std::vector<std::uint32_t> occupied;
    for (std::uint32_t id = 0; id < bins_.size(); ++id) {
      if (!bins_[id].empty()) occupied.push_back(id);
    }
    result.manifest.windows.resize(occupied.size());
    result.rasters.resize(occupied.size());
    parallel_for(occupied.size(), options.jobs, [&](std::size_t i) {
      WindowMeta meta = locator_.windows()[occupied[i]];
      result.rasters[i] = rasterize(bins_[occupied[i]], meta);
      result.manifest.windows[i] = meta;
      std::vector<Point>().swap(bins_[occupied[i]]);
    });
    return result;
  }

 private:
  WindowLocator locator_;
  std::vector<std::vector<Point>> bins_;
  std::vector<std::uint32_t> scratch_;
  std::uint64_t seen_ = 0;
  std::uint64_t uncovered_ = 0;
};

ProjectionResult empty_result(const ProjectionConfig& config) {
  ProjectionResult result;
  result.manifest.config = config;
  return result;
}

}  // namespace

ProjectionResult project(std::span<const Point> cloud, const ProjectionConfig& config,
                         const ProjectOptions& options) {
  config.validate();
  Bounds2 bounds;
  for (const Point& p : cloud) bounds.extend(p);
  if (cloud.empty()) return empty_result(config);

  Binner binner(bounds, config, options);
  binner.add(cloud);
  return binner.finish(config, options);
}

ProjectionResult project_file(const std::filesystem::path& cloud_path,
                              const ProjectionConfig& config, const ProjectOptions& options) {
  config.validate();
  Bounds2 bounds;
  std::uint64_t count = 0;
  for_each_batch(cloud_path, options.chunk_size, [&](std::span<const Point> batch) {
    for (const Point& p : batch) bounds.extend(p);
    count += batch.size();
  });
  if (count == 0) return empty_result(config);

  Binner binner(bounds, config, options);
  for_each_batch(cloud_path, options.chunk_size,
                 [&](std::span<const Point> batch) { binner.add(batch); });
  return binner.finish(config, options);
}

}  // namespace bevgrid
