#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "bevgrid/metrics.hpp"
#include "bevgrid/projection.hpp"

namespace bevgrid {

// Projection loss analysis. A point "overlaps" when it is not the top-z winner
// of its pixel, i.e. it disappears from the BEV image.

struct CellOverlap {
  std::int64_t col = 0;
  std::int64_t row = 0;
  std::uint64_t point_count = 0;
  std::uint64_t overlapped_point_count = 0;
};

struct CurvePoint {
  double rank_percentile = 0.0;  // start of the rank bin, 0 = densest cells
  double overlap_ratio = 0.0;
};

struct OverlapStats {
  double probe_scale = 0.0;
  double cell_size = 0.0;
  std::uint64_t point_count = 0;
  std::uint64_t overlapped_point_count = 0;
  double spatial_overlap_ratio = 0.0;
  std::vector<CellOverlap> cells;  // ranked by point count, densest first
  std::vector<CurvePoint> curve;   // non-empty rank bins only
};

inline constexpr std::array<double, 4> kDefaultProbeScales = {0.01, 0.02, 0.03, 0.04};

/// Overlap at `probe_scale` on a pixel lattice anchored at the cloud's min
/// corner, reported per `cell_size` analysis cell ranked by point count.
OverlapStats spatial_overlap(std::span<const Point> cloud, double probe_scale,
                             double cell_size = 1.0, int curve_bins = 100);

enum class OverlapDenominator {
  kAllPoints,         // every evaluated point
  kOverlappedPoints,  // evaluated points that lost their pixel
};

std::string_view to_string(OverlapDenominator d);
std::optional<OverlapDenominator> parse_denominator(std::string_view s);

/// Class loss under the projection windows of `config`.
///
/// Evaluated points carry a class id and sit under a winner that carries one
/// too (the same points the oracle metrics count). A point disagrees when its
/// class differs from its pixel winner's class.
struct ClassOverlapStats {
  OverlapDenominator denominator = OverlapDenominator::kAllPoints;
  std::uint64_t point_count = 0;
  std::uint64_t uncovered = 0;
  std::uint64_t evaluated = 0;
  std::uint64_t overlapped = 0;   // evaluated non-winners
  std::uint64_t disagreeing = 0;  // evaluated, label != winner label
  double spatial_overlap_ratio = 0.0;  // overlapped / evaluated
  double class_overlap_ratio = 0.0;
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> pairs{};  // [winner][loser]
};

ClassOverlapStats class_overlap(std::span<const Point> cloud, const ProjectionConfig& config,
                                OverlapDenominator denominator = OverlapDenominator::kAllPoints);

/// Metrics reached by labeling every point with its pixel winner's true class:
/// the ceiling for any 2D segmenter behind this projection.
struct OracleBound {
  std::vector<ClassId> labels;  // per cloud position
  ConfusionMatrix confusion;
  MetricsSummary summary;
};

OracleBound oracle_bound(std::span<const Point> cloud, const ProjectionConfig& config);

}  // namespace bevgrid
