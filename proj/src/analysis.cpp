#include "bevgrid/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>
#include <tuple>

namespace bevgrid {
namespace {

constexpr std::uint64_t kUncovered = std::numeric_limits<std::uint64_t>::max();

std::int64_t lattice_index(double v, double origin, double step) {
  return static_cast<std::int64_t>(std::floor((v - origin) / step));
}

Bounds2 bounds_of(std::span<const Point> cloud) {
  Bounds2 b;
  for (const Point& p : cloud) b.extend(p);
  return b;
}

// Sorting puts each pixel's winner first: highest z, then lowest index.
struct PixelEntry {
  std::uint64_t key_hi = 0;
  std::uint64_t key_lo = 0;
  double z = 0.0;
  std::uint64_t index = 0;
  std::uint32_t pos = 0;

  bool operator<(const PixelEntry& o) const {
    return std::tie(key_hi, key_lo, o.z, index) < std::tie(o.key_hi, o.key_lo, z, o.index);
  }
  bool same_pixel(const PixelEntry& o) const { return key_hi == o.key_hi && key_lo == o.key_lo; }
};

// For every cloud position, the position of its pixel's winner inside the
// projection windows (kUncovered when no window claims the point).
std::vector<std::uint64_t> window_winners(std::span<const Point> cloud,
                                          const ProjectionConfig& config,
                                          std::uint64_t& uncovered) {
  std::vector<std::uint64_t> winner(cloud.size(), kUncovered);
  uncovered = 0;
  if (cloud.empty()) return winner;

  const WindowLocator locator(
      partition_grid(projection_bounds(bounds_of(cloud), config), config.cell_side), config);
  const auto px_per_side = static_cast<std::uint64_t>(config.pixels_per_side());

  std::vector<PixelEntry> entries;
  entries.reserve(cloud.size());
  std::vector<PixelEntry> owned(cloud.size());  // owner pixel per position
  std::vector<std::uint8_t> covered(cloud.size(), 0);
  std::vector<std::uint32_t> members;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    locator.members(p, members);
    if (members.empty()) {
      ++uncovered;
      continue;
    }
    for (std::size_t m = 0; m < members.size(); ++m) {
      const auto q = quantize(p, locator.windows()[members[m]]);
      PixelEntry e{members[m], static_cast<std::uint64_t>(q->py) * px_per_side + q->px, p.z,
                   p.index, static_cast<std::uint32_t>(i)};
      if (m == 0) owned[i] = e;
      entries.push_back(e);
    }
    covered[i] = 1;
  }
  std::sort(entries.begin(), entries.end());

  // Winner of each distinct pixel, in key order.
  std::vector<PixelEntry> heads;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    if (k == 0 || !entries[k].same_pixel(entries[k - 1])) heads.push_back(entries[k]);
  }
  const auto key_less = [](const PixelEntry& a, const PixelEntry& b) {
    return std::tie(a.key_hi, a.key_lo) < std::tie(b.key_hi, b.key_lo);
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!covered[i]) continue;
    const auto it = std::lower_bound(heads.begin(), heads.end(), owned[i], key_less);
    winner[i] = it->pos;
  }
  return winner;
}

void require_labels(std::span<const Point> cloud) {
  if (cloud.empty()) throw Error("cannot analyze an empty cloud");
  const bool any = std::any_of(cloud.begin(), cloud.end(),
                               [](const Point& p) { return is_class_id(p.label); });
  if (!any) throw Error("cloud has no labeled points (all labels are 255)");
}

}  // namespace

OverlapStats spatial_overlap(std::span<const Point> cloud, double probe_scale, double cell_size,
                             int curve_bins) {
  if (!(probe_scale > 0.0) || !std::isfinite(probe_scale)) {
    throw ConfigError("probe scale must be positive");
  }
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) {
    throw ConfigError("analysis cell size must be positive");
  }
  if (curve_bins < 1) throw ConfigError("curve needs at least one bin");
  if (cloud.empty()) throw Error("cannot analyze an empty cloud");

  const Bounds2 b = bounds_of(cloud);
  std::vector<PixelEntry> entries(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point& p = cloud[i];
    entries[i] = {std::bit_cast<std::uint64_t>(lattice_index(p.x, b.min_x, probe_scale)),
                  std::bit_cast<std::uint64_t>(lattice_index(p.y, b.min_y, probe_scale)), p.z,
                  p.index, static_cast<std::uint32_t>(i)};
  }
  std::sort(entries.begin(), entries.end());
  std::vector<std::uint8_t> lost(cloud.size(), 0);
  for (std::size_t k = 1; k < entries.size(); ++k) {
    if (entries[k].same_pixel(entries[k - 1])) lost[entries[k].pos] = 1;
  }

  OverlapStats stats;
  stats.probe_scale = probe_scale;
  stats.cell_size = cell_size;
  stats.point_count = cloud.size();

  // Per analysis cell tallies.
  std::vector<std::tuple<std::int64_t, std::int64_t, std::uint8_t>> by_cell(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    by_cell[i] = {lattice_index(cloud[i].x, b.min_x, cell_size),
                  lattice_index(cloud[i].y, b.min_y, cell_size), lost[i]};
    stats.overlapped_point_count += lost[i];
  }
  std::sort(by_cell.begin(), by_cell.end());
  for (const auto& [col, row, l] : by_cell) {
    if (stats.cells.empty() || stats.cells.back().col != col || stats.cells.back().row != row) {
      stats.cells.push_back({col, row, 0, 0});
    }
    ++stats.cells.back().point_count;
    stats.cells.back().overlapped_point_count += l;
  }
  std::stable_sort(stats.cells.begin(), stats.cells.end(),
                   [](const CellOverlap& a, const CellOverlap& c) {
                     return a.point_count > c.point_count;
                   });
  stats.spatial_overlap_ratio =
      static_cast<double>(stats.overlapped_point_count) / static_cast<double>(stats.point_count);

  const std::size_t n = stats.cells.size();
  std::vector<std::uint64_t> bin_points(curve_bins, 0);
  std::vector<std::uint64_t> bin_lost(curve_bins, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t bin = r * static_cast<std::size_t>(curve_bins) / n;
    bin_points[bin] += stats.cells[r].point_count;
    bin_lost[bin] += stats.cells[r].overlapped_point_count;
  }
  for (int bin = 0; bin < curve_bins; ++bin) {
    if (bin_points[bin] == 0) continue;
    stats.curve.push_back({100.0 * bin / curve_bins, static_cast<double>(bin_lost[bin]) /
                                                         static_cast<double>(bin_points[bin])});
  }
  return stats;
}

std::string_view to_string(OverlapDenominator d) {
  return d == OverlapDenominator::kOverlappedPoints ? "overlapped" : "all";
}

std::optional<OverlapDenominator> parse_denominator(std::string_view s) {
  if (s == "all") return OverlapDenominator::kAllPoints;
  if (s == "overlapped") return OverlapDenominator::kOverlappedPoints;
  return std::nullopt;
}

ClassOverlapStats class_overlap(std::span<const Point> cloud, const ProjectionConfig& config,
                                OverlapDenominator denominator) {
  config.validate();
  require_labels(cloud);

  ClassOverlapStats s;
  s.denominator = denominator;
  s.point_count = cloud.size();
  const auto winner = window_winners(cloud, config, s.uncovered);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (winner[i] == kUncovered) continue;
    const ClassId mine = cloud[i].label;
    const ClassId top = cloud[winner[i]].label;
    if (!is_class_id(mine) || !is_class_id(top)) continue;
    ++s.evaluated;
    if (winner[i] == i) continue;
    ++s.overlapped;
    if (mine != top) {
      ++s.disagreeing;
      ++s.pairs[top][mine];
    }
  }
  const auto ratio = [](std::uint64_t num, std::uint64_t den) {
    return den ? static_cast<double>(num) / static_cast<double>(den) : 0.0;
  };
  s.spatial_overlap_ratio = ratio(s.overlapped, s.evaluated);
  s.class_overlap_ratio = denominator == OverlapDenominator::kAllPoints
                              ? ratio(s.disagreeing, s.evaluated)
                              : ratio(s.disagreeing, s.overlapped);
  return s;
}

OracleBound oracle_bound(std::span<const Point> cloud, const ProjectionConfig& config) {
  config.validate();
  require_labels(cloud);

  OracleBound o;
  std::uint64_t uncovered = 0;
  const auto winner = window_winners(cloud, config, uncovered);
  o.labels.resize(cloud.size(), kUnlabeled);
  std::vector<ClassId> gt(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    gt[i] = cloud[i].label;
    if (winner[i] != kUncovered) o.labels[i] = cloud[winner[i]].label;
  }
  o.confusion.accumulate(gt, o.labels);
  o.summary = summarize(o.confusion);
  return o;
}

}  // namespace bevgrid
