#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bevgrid/point.hpp"

namespace bevgrid {

/// Parameters of the sliding-window BEV projection and its completion pass.
struct ProjectionConfig {
  double g_scale = 0.05;   // meters per pixel
  double g_size = 25.0;    // window side, meters
  double g_step = 25.0;    // window stride, meters
  double cell_side = 400.0;
  int completion_iterations = 3;
  int kernel = 3;

  /// Throws ConfigError on any violated constraint.
  void validate() const;
  int pixels_per_side() const;
  /// Windows are disjoint and tile each cell.
  bool tiles() const { return g_step >= g_size; }

  friend bool operator==(const ProjectionConfig&, const ProjectionConfig&) = default;
};

struct GridCell {
  std::uint32_t id = 0;
  std::uint32_t col = 0;
  std::uint32_t row = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
  bool last_col = false;
  bool last_row = false;
};

/// Cells of side `cell_side` tiling a bounding box, row-major ids.
struct GridLayout {
  Bounds2 bounds;
  double cell_side = 0.0;
  std::uint32_t cols = 0;
  std::uint32_t rows = 0;
  std::vector<GridCell> cells;

  /// Cell of a location; locations on or past the global max edge clamp to
  /// the last cell.
  std::uint32_t cell_of(double x, double y) const;
};

/// Cells cover [min, min + k*cell_side) per axis with half-open intervals;
/// ceil(extent / cell_side) cells per axis.
GridLayout partition_grid(const Bounds2& bounds, double cell_side);

inline constexpr std::uint64_t kNoWinner = std::numeric_limits<std::uint64_t>::max();

/// Absolute placement of one projected window, enough to map pixels back to
/// world coordinates.
struct WindowMeta {
  std::uint32_t window_id = 0;
  std::uint32_t cell_id = 0;
  std::uint32_t win_x = 0;  // origin offset from the cell corner, in strides
  std::uint32_t win_y = 0;
  double x_s = 0.0;
  double y_s = 0.0;
  int width_px = 0;
  int height_px = 0;
  double z_min = 0.0;
  double z_max = 0.0;
  std::uint64_t point_count = 0;
  double g_scale = 0.0;
  // Window touches the global max edge on that axis; points exactly on its far
  // edge clamp into the last pixel.
  bool clamp_x = false;
  bool clamp_y = false;

  friend bool operator==(const WindowMeta&, const WindowMeta&) = default;
};

/// File-name stem of a window's bundle: `cell{C}_win{X}_{Y}`.
std::string bundle_name(const WindowMeta& window);

/// Windows of one cell, geometry only. Ids are assigned consecutively from
/// `first_id`, stride-x major.
std::vector<WindowMeta> windows(const GridCell& cell, const ProjectionConfig& config,
                                std::uint32_t first_id = 0);

struct PixelCoord {
  int px = 0;
  int py = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// floor((x - x_s) / g_scale) per axis, or nullopt when outside the window.
std::optional<PixelCoord> quantize(const Point& p, const WindowMeta& window);

/// Per-window images. Row index is py (increasing y), column index is px.
struct RasterSet {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // width*height*3
  std::vector<double> alt;        // meters
  std::vector<ClassId> label;     // kUnlabeled where nodata
  std::vector<std::uint8_t> mask; // 1 where the pixel holds data
  std::vector<std::uint64_t> winner_index;  // kNoWinner unless a point was projected here

  static RasterSet nodata(int width, int height);

  std::size_t pixel(int px, int py) const {
    return static_cast<std::size_t>(py) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(px);
  }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t masked_count() const;

  friend bool operator==(const RasterSet&, const RasterSet&) = default;
};

/// Top-z rasterization of the window's points. The highest point wins each
/// pixel, ties going to the lowest point index, so the result does not depend
/// on input order. Also fills the window's z range and point count.
/// Every point must quantize into the window.
RasterSet rasterize(std::span<const Point> points, WindowMeta& window);

/// Resolves which window(s) own a world location, for a grid and config.
class WindowLocator {
 public:
  WindowLocator(GridLayout grid, const ProjectionConfig& config);

  const GridLayout& grid() const { return grid_; }
  const ProjectionConfig& config() const { return config_; }
  const std::vector<WindowMeta>& windows() const { return windows_; }

  /// Windows whose raster includes the point, ascending id. Only the owning
  /// window is returned when windows tile the cell.
  void members(const Point& p, std::vector<std::uint32_t>& out) const;

  /// Lowest-id window containing the point, or nullopt if none does.
  std::optional<std::uint32_t> owner(const Point& p) const;

 private:
  void candidates(const Point& p, std::uint32_t cell, std::vector<std::uint32_t>& out) const;

  GridLayout grid_;
  ProjectionConfig config_;
  std::vector<WindowMeta> windows_;
  std::vector<std::uint32_t> first_window_;  // per cell
  std::vector<std::uint32_t> nx_;            // windows per cell along x
  std::vector<std::uint32_t> ny_;
};

/// Bounds used for projection: the cloud's extent, with a zero-width axis
/// widened to one pixel.
Bounds2 projection_bounds(const Bounds2& cloud_bounds, const ProjectionConfig& config);

struct Manifest {
  ProjectionConfig config;
  Bounds2 bounds;
  std::uint64_t point_count = 0;
  std::uint64_t uncovered_points = 0;  // points no window claimed
  std::vector<WindowMeta> windows;     // non-empty windows, ascending id
};

struct ProjectionResult {
  Manifest manifest;
  std::vector<RasterSet> rasters;  // parallel to manifest.windows
};

struct ProjectOptions {
  unsigned jobs = 1;
  std::uint64_t max_window_pixels = 1ull << 26;
  std::size_t chunk_size = 1 << 16;
};

/// Bounds -> grid -> windows -> binning -> per-window rasterization.
ProjectionResult project(std::span<const Point> cloud, const ProjectionConfig& config,
                         const ProjectOptions& options = {});

/// Streaming variant: one pass for bounds, one pass to bin.
ProjectionResult project_file(const std::filesystem::path& cloud_path,
                              const ProjectionConfig& config, const ProjectOptions& options = {});

/// Rebuilds the locator that produced a manifest.
WindowLocator locator_for(const Manifest& manifest);

}  // namespace bevgrid
