#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bevgrid/projection.hpp"

namespace bevgrid {

/// Dense per-pixel class prediction for one window. 255 means "no prediction".
struct PredictionRaster {
  std::uint32_t window_id = 0;
  int width = 0;
  int height = 0;
  std::vector<ClassId> label;
};

/// Ground-truth passthrough: the window's own label raster as a prediction.
PredictionRaster prediction_from(const RasterSet& raster, const WindowMeta& meta);

/// Labels for `points` (same order) read from the prediction pixel each point
/// quantizes to.
std::vector<ClassId> remap_window(const PredictionRaster& pred, const WindowMeta& meta,
                                  std::span<const Point> points);

struct CoverageReport {
  std::uint64_t total = 0;
  std::uint64_t labeled = 0;         // received a class id
  std::uint64_t labeled_nodata = 0;  // their pixel held 255
  std::uint64_t outside = 0;         // in no manifest window; labeled 255

  friend bool operator==(const CoverageReport&, const CoverageReport&) = default;
};

struct RemapResult {
  std::vector<ClassId> labels;  // indexed by Point::index
  CoverageReport coverage;
};

/// Labels every point of the cloud from its owning window's prediction. When
/// windows overlap, the lowest window id wins. Every manifest window needs a
/// prediction; extras are ignored.
RemapResult remap(const Manifest& manifest, std::span<const PredictionRaster> predictions,
                  std::span<const Point> cloud, unsigned jobs = 1);

RemapResult remap_file(const Manifest& manifest, std::span<const PredictionRaster> predictions,
                       const std::filesystem::path& cloud_path, unsigned jobs = 1,
                       std::size_t chunk_size = 1 << 16);

}  // namespace bevgrid
