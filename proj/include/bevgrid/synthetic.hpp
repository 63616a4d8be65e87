#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "bevgrid/point.hpp"

namespace bevgrid {

struct Rect {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  /// Half-open containment.
  bool contains(double x, double y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

enum class ObjectKind {
  kPlane,   // flat surface at z_base (ground, road, water patches)
  kBox,     // roof at z_top over the footprint, optional walls down to z_base
  kColumn,  // points spread over [z_base, z_top] (vegetation, poles)
};

struct SceneObject {
  ObjectKind kind = ObjectKind::kPlane;
  ClassId label = 0;
  Rect footprint;
  double z_base = 0.0;
  double z_top = 0.0;
  bool walls = false;

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

enum class Sampling {
  kUniform,  // i.i.d. uniform (x, y) per footprint
  kLattice,  // one point per lattice site of pitch 1/sqrt(density), shared by all objects
};

/// Recipe for a deterministic synthetic urban scene on [0, width] x [0, height].
struct SceneSpec {
  double width_m = 0.0;
  double height_m = 0.0;
  double density = 0.0;  // points per square meter of surface
  std::vector<SceneObject> objects;
  std::uint64_t rng_seed = 0;
  Sampling sampling = Sampling::kUniform;

  void validate() const;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

/// Points contributed by one object: its surface area times the density,
/// rounded. Lattice scenes count lattice sites instead.
std::uint64_t expected_point_count(const SceneSpec& spec);

/// Pure function of `spec`. Point order follows the object list; indices are
/// assigned in generation order. Surfaces get at most 1 cm of z jitter.
std::vector<Point> generate_synthetic_city(const SceneSpec& spec);

// Presets used by the CLI and tests.

/// Ground plane covering the whole extent.
SceneSpec flat_scene(double width, double height, double density, std::uint64_t seed);

/// Disjoint flat patches of several classes tiling the extent (single layer).
SceneSpec mosaic_scene(double width, double height, double density, std::uint64_t seed,
                       Sampling sampling = Sampling::kLattice);

/// Ground plane plus one wall-less box roof over `roof` at height `roof_z`.
SceneSpec roof_scene(double width, double height, double density, const Rect& roof,
                     double roof_z, std::uint64_t seed);

/// Randomized block layout: ground, roads, buildings (some wall-less), trees and cars.
SceneSpec city_scene(double width, double height, double density, std::uint64_t seed);

}  // namespace bevgrid
