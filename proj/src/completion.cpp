#include "bevgrid/completion.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <string>

namespace bevgrid {
namespace {

void check_kernel(int kernel) {
  if (kernel < 3 || kernel % 2 == 0) {
    throw ConfigError("completion kernel must be odd and at least 3, got " +
                      std::to_string(kernel));
  }
}

// One synchronous pass; returns the number of pixels filled.
std::size_t fill_pass(const RasterSet& prev, RasterSet& next, int radius, LabelStrategy strategy) {
  std::size_t filled = 0;
  std::array<std::uint32_t, kNumClasses> votes{};
  for (int py = 0; py < prev.height; ++py) {
    for (int px = 0; px < prev.width; ++px) {
      const std::size_t i = prev.pixel(px, py);
      if (prev.mask[i]) continue;

      bool any = false;
      std::array<std::uint8_t, 3> rgb{};
      double alt = 0.0;
      votes.fill(0);
      int max_label = -1;
      const int y0 = std::max(0, py - radius);
      const int y1 = std::min(prev.height - 1, py + radius);
      const int x0 = std::max(0, px - radius);
      const int x1 = std::min(prev.width - 1, px + radius);
      for (int ny = y0; ny <= y1; ++ny) {
        for (int nx = x0; nx <= x1; ++nx) {
          const std::size_t j = prev.pixel(nx, ny);
          if (!prev.mask[j]) continue;
          const ClassId l = prev.label[j];
          if (!any) {
            alt = prev.alt[j];
          } else {
            alt = std::max(alt, prev.alt[j]);
          }
          any = true;
          for (int c = 0; c < 3; ++c) rgb[c] = std::max(rgb[c], prev.rgb[3 * j + c]);
          if (is_class_id(l)) {
            ++votes[l];
            max_label = std::max<int>(max_label, l);
          }
        }
      }
      if (!any) continue;

      ClassId label = kUnlabeled;
      if (strategy == LabelStrategy::kMaxId) {
        if (max_label >= 0) label = static_cast<ClassId>(max_label);
      } else {
        std::uint32_t best = 0;
        for (int c = 0; c < kNumClasses; ++c) {
          if (votes[c] > best) {
            best = votes[c];
            label = static_cast<ClassId>(c);
          }
        }
      }
      next.mask[i] = 1;
      next.alt[i] = alt;
      for (int c = 0; c < 3; ++c) next.rgb[3 * i + c] = rgb[c];
      next.label[i] = label;
      ++filled;
    }
  }
  return filled;
}

}  // namespace

std::string_view to_string(LabelStrategy s) {
  return s == LabelStrategy::kMaxId ? "max-id" : "majority";
}

std::optional<LabelStrategy> parse_label_strategy(std::string_view s) {
  if (s == "majority") return LabelStrategy::kMajority;
  if (s == "max-id") return LabelStrategy::kMaxId;
  return std::nullopt;
}

RasterSet complete(const RasterSet& raster, int iterations, int kernel, LabelStrategy strategy) {
  check_kernel(kernel);
  if (iterations < 0) throw ConfigError("completion iterations must be non-negative");
  const int radius = kernel / 2;

  RasterSet current = raster;
  for (int it = 0; it < iterations; ++it) {
    RasterSet next = current;
    if (fill_pass(current, next, radius, strategy) == 0) break;
    current = std::move(next);
  }
  return current;
}

int fixpoint_iterations(const RasterSet& raster, int kernel) {
  check_kernel(kernel);
  const int radius = kernel / 2;
  const std::size_t n = raster.pixel_count();

  // Multi-source BFS over the 8-neighbourhood gives Chebyshev distances.
  std::vector<int> dist(n, -1);
  std::deque<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (raster.mask[i]) {
      dist[i] = 0;
      queue.push_back(i);
    }
  }
  if (queue.empty()) throw Error("fixpoint undefined: raster has no masked pixel");

  int farthest = 0;
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const int px = static_cast<int>(i % raster.width);
    const int py = static_cast<int>(i / raster.width);
    farthest = std::max(farthest, dist[i]);
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int nx = px + dx;
        const int ny = py + dy;
        if (nx < 0 || ny < 0 || nx >= raster.width || ny >= raster.height) continue;
        const std::size_t j = raster.pixel(nx, ny);
        if (dist[j] >= 0) continue;
        dist[j] = dist[i] + 1;
        queue.push_back(j);
      }
    }
  }
  return (farthest + radius - 1) / radius;
}

}  // namespace bevgrid
