#include "bevgrid/remapping.hpp"

#include <algorithm>
#include <string>
#include <unordered_map>

#include "bevgrid/parallel.hpp"
#include "bevgrid/pointcloud_io.hpp"

namespace bevgrid {
namespace {

void check_dimensions(const PredictionRaster& pred, const WindowMeta& meta) {
  if (pred.width != meta.width_px || pred.height != meta.height_px ||
      pred.label.size() != static_cast<std::size_t>(pred.width) * pred.height) {
    throw Error("prediction for " + bundle_name(meta) + " is " + std::to_string(pred.width) +
                "x" + std::to_string(pred.height) + ", window is " +
                std::to_string(meta.width_px) + "x" + std::to_string(meta.height_px));
  }
}

// Manifest windows and their predictions, indexed by window id.
class PredictionIndex {
 public:
  PredictionIndex(const Manifest& manifest, std::span<const PredictionRaster> predictions) {
    std::unordered_map<std::uint32_t, const PredictionRaster*> by_id;
    for (const PredictionRaster& p : predictions) by_id.emplace(p.window_id, &p);
    for (const WindowMeta& w : manifest.windows) {
      if (!entries_.emplace(w.window_id, Entry{&w, nullptr}).second) {
        throw Error("duplicate window_id " + std::to_string(w.window_id) + " in manifest (" +
                    bundle_name(w) + ")");
      }
      const auto it = by_id.find(w.window_id);
      if (it == by_id.end()) throw Error("missing prediction raster for window " + bundle_name(w));
      check_dimensions(*it->second, w);
      entries_[w.window_id].pred = it->second;
    }
  }

  struct Entry {
    const WindowMeta* meta;
    const PredictionRaster* pred;
  };

  const Entry* find(std::uint32_t id) const {
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : &it->second;
  }

 private:
  std::unordered_map<std::uint32_t, Entry> entries_;
};

void remap_points(const WindowLocator& locator, const PredictionIndex& index,
                  std::span<const Point> points, std::vector<ClassId>& labels, unsigned jobs,
                  CoverageReport& coverage) {
  constexpr std::size_t kBlock = 8192;
  const std::size_t blocks = (points.size() + kBlock - 1) / kBlock;
  std::vector<CoverageReport> partial(blocks);

  parallel_for(blocks, jobs, [&](std::size_t b) {
    CoverageReport& cov = partial[b];
    const std::size_t end = std::min(points.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) {
      const Point& p = points[i];
      ++cov.total;
      ClassId label = kUnlabeled;
      const auto owner = locator.owner(p);
      const PredictionIndex::Entry* e = owner ? index.find(*owner) : nullptr;
      const auto q = e ? quantize(p, *e->meta) : std::nullopt;
      if (!q) {
        ++cov.outside;
      } else {
        label = e->pred->label[static_cast<std::size_t>(q->py) * e->pred->width + q->px];
        if (label == kUnlabeled) {
          ++cov.labeled_nodata;
        } else {
          ++cov.labeled;
        }
      }
      labels[p.index] = label;
    }
  });

  for (const CoverageReport& c : partial) {
    coverage.total += c.total;
    coverage.labeled += c.labeled;
    coverage.labeled_nodata += c.labeled_nodata;
    coverage.outside += c.outside;
  }
}

void check_indices(std::span<const Point> points, std::uint64_t limit) {
  for (const Point& p : points) {
    if (p.index >= limit) {
      throw Error("point index " + std::to_string(p.index) + " out of range for a cloud of " +
                  std::to_string(limit) + " points");
    }
  }
}

}  // namespace

PredictionRaster prediction_from(const RasterSet& raster, const WindowMeta& meta) {
  return PredictionRaster{meta.window_id, raster.width, raster.height, raster.label};
}

std::vector<ClassId> remap_window(const PredictionRaster& pred, const WindowMeta& meta,
                                  std::span<const Point> points) {
  if (pred.window_id != meta.window_id) {
    throw Error("unknown window_id " + std::to_string(pred.window_id) + " for window " +
                bundle_name(meta) + " (id " + std::to_string(meta.window_id) + ")");
  }
  check_dimensions(pred, meta);
  std::vector<ClassId> out(points.size(), kUnlabeled);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto q = quantize(points[i], meta);
    if (!q) {
      throw Error("point " + std::to_string(points[i].index) + " does not fall in window " +
                  bundle_name(meta));
    }
    out[i] = pred.label[static_cast<std::size_t>(q->py) * pred.width + q->px];
  }
  return out;
}

RemapResult remap(const Manifest& manifest, std::span<const PredictionRaster> predictions,
                  std::span<const Point> cloud, unsigned jobs) {
  RemapResult result;
  result.labels.assign(cloud.size(), kUnlabeled);
  if (cloud.empty()) return result;
  check_indices(cloud, cloud.size());
  const PredictionIndex index(manifest, predictions);
  if (manifest.windows.empty()) {
    result.coverage.total = result.coverage.outside = cloud.size();
    return result;
  }
  const WindowLocator locator = locator_for(manifest);
  remap_points(locator, index, cloud, result.labels, jobs, result.coverage);
  return result;
}

RemapResult remap_file(const Manifest& manifest, std::span<const PredictionRaster> predictions,
                       const std::filesystem::path& cloud_path, unsigned jobs,
                       std::size_t chunk_size) {
  PointReader reader(cloud_path);
  RemapResult result;
  result.labels.assign(static_cast<std::size_t>(reader.size()), kUnlabeled);
  const PredictionIndex index(manifest, predictions);
  if (manifest.windows.empty()) {
    result.coverage.total = result.coverage.outside = reader.size();
    return result;
  }
  const WindowLocator locator = locator_for(manifest);
  while (!reader.done()) {
    const auto batch = reader.next_batch(chunk_size);
    remap_points(locator, index, batch, result.labels, jobs, result.coverage);
  }
  return result;
}

}  // namespace bevgrid
