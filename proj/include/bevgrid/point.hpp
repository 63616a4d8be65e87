#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bevgrid {

using ClassId = std::uint8_t;

inline constexpr int kNumClasses = 13;
inline constexpr ClassId kUnlabeled = 255;

/// Base error for every failure raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a configuration fails validation, before any work is done.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// One colored, labeled 3D sample.
///
/// `index` is the zero-based read order of the point in its source cloud and
/// is the identity used by every per-point output (label files, remapping).
struct Point {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  ClassId label = kUnlabeled;
  std::uint64_t index = 0;

  friend bool operator==(const Point&, const Point&) = default;
};

inline constexpr bool is_class_id(int label) { return label >= 0 && label < kNumClasses; }
inline constexpr bool is_valid_label(int label) { return is_class_id(label) || label == kUnlabeled; }

/// Class names in id order (0..12).
const std::array<std::string_view, kNumClasses>& class_table();
std::string_view class_name(ClassId id);

/// Axis-aligned x/y extent of a cloud. Empty until the first point is added.
struct Bounds2 {
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = std::numeric_limits<double>::infinity();
  double max_x = -std::numeric_limits<double>::infinity();
  double max_y = -std::numeric_limits<double>::infinity();

  bool empty() const { return !(min_x <= max_x && min_y <= max_y); }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }

  void extend(double x, double y) {
    if (x < min_x) min_x = x;
    if (x > max_x) max_x = x;
    if (y < min_y) min_y = y;
    if (y > max_y) max_y = y;
  }
  void extend(const Point& p) { extend(p.x, p.y); }

  friend bool operator==(const Bounds2&, const Bounds2&) = default;
};

}  // namespace bevgrid
