#include "bevgrid/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace bevgrid {
namespace {

constexpr double kZJitter = 0.01;

// Uniform double in [0, 1) from the top 53 bits; the mt19937_64 sequence is
// fixed by the standard, so output is identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Rgb {
  std::uint8_t r, g, b;
};

Rgb class_color(ClassId label) {
  static constexpr std::array<Rgb, kNumClasses> kColors = {{
      {120, 110, 90},   // ground
      {60, 130, 50},    // vegetation
      {170, 90, 70},    // building
      {200, 190, 170},  // wall
      {140, 140, 150},  // bridge
      {90, 90, 100},    // parking
      {110, 80, 60},    // rail
      {50, 50, 55},     // traffic road
      {220, 200, 40},   // street furniture
      {30, 60, 160},    // car
      {180, 170, 150},  // footpath
      {200, 40, 40},    // bike
      {40, 90, 140},    // water
  }};
  return kColors[label];
}

std::uint8_t vary(std::uint8_t base, Rng& rng) {
  const int v = static_cast<int>(base) + rng.integer(-12, 12);
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

std::uint64_t surface_count(double area, double density) {
  return static_cast<std::uint64_t>(std::llround(area * density));
}

double lattice_pitch(const SceneSpec& spec) { return 1.0 / std::sqrt(spec.density); }

// Lattice site coordinate; every object evaluates the same expression, so
// objects sharing a site produce bit-identical x/y.
double site(std::int64_t i, double pitch) { return (static_cast<double>(i) + 0.5) * pitch; }

std::pair<std::int64_t, std::int64_t> site_range(double lo, double hi, double pitch) {
  auto first = static_cast<std::int64_t>(std::floor(lo / pitch - 0.5));
  first = std::max<std::int64_t>(first, 0);
  while (site(first, pitch) < lo) ++first;
  while (first > 0 && site(first - 1, pitch) >= lo) --first;
  std::int64_t last = first;
  while (site(last, pitch) < hi) ++last;
  return {first, last};  // [first, last)
}

std::uint64_t lattice_count(const Rect& r, double pitch) {
  const auto [ix0, ix1] = site_range(r.x0, r.x1, pitch);
  const auto [iy0, iy1] = site_range(r.y0, r.y1, pitch);
  return static_cast<std::uint64_t>((ix1 - ix0) * (iy1 - iy0));
}

double wall_area(const SceneObject& obj) {
  return 2.0 * (obj.footprint.width() + obj.footprint.height()) * (obj.z_top - obj.z_base);
}

class Emitter {
 public:
  Emitter(std::vector<Point>& out, const SceneObject& obj, Rng& rng)
      : out_(out), obj_(obj), rng_(rng), base_(class_color(obj.label)) {}

  void emit(double x, double y, double z) {
    Point p;
    p.x = x;
    p.y = y;
    p.z = z;
    p.r = vary(base_.r, rng_);
    p.g = vary(base_.g, rng_);
    p.b = vary(base_.b, rng_);
    p.label = obj_.label;
    p.index = out_.size();
    out_.push_back(p);
  }

 private:
  std::vector<Point>& out_;
  const SceneObject& obj_;
  Rng& rng_;
  Rgb base_;
};

void emit_surface(const SceneSpec& spec, const SceneObject& obj, double z0, double z1,
                  Emitter& emit, Rng& rng) {
  const Rect& f = obj.footprint;
  if (spec.sampling == Sampling::kLattice) {
    const double pitch = lattice_pitch(spec);
    const auto [ix0, ix1] = site_range(f.x0, f.x1, pitch);
    const auto [iy0, iy1] = site_range(f.y0, f.y1, pitch);
    for (auto ix = ix0; ix < ix1; ++ix) {
      for (auto iy = iy0; iy < iy1; ++iy) {
        emit.emit(site(ix, pitch), site(iy, pitch), rng.uniform(z0, z1));
      }
    }
    return;
  }
  const std::uint64_t n = surface_count(f.area(), spec.density);
  for (std::uint64_t i = 0; i < n; ++i) {
    const double x = rng.uniform(f.x0, f.x1);
    const double y = rng.uniform(f.y0, f.y1);
    emit.emit(x, y, rng.uniform(z0, z1));
  }
}

void emit_walls(const SceneSpec& spec, const SceneObject& obj, Emitter& emit, Rng& rng) {
  const Rect& f = obj.footprint;
  const double w = f.width();
  const double h = f.height();
  const double perimeter = 2.0 * (w + h);
  const std::uint64_t n = surface_count(wall_area(obj), spec.density);
  for (std::uint64_t i = 0; i < n; ++i) {
    double t = rng.uniform(0.0, perimeter);
    double x = 0.0;
    double y = 0.0;
    if (t < w) {
      x = f.x0 + t;
      y = f.y0;
    } else if ((t -= w) < h) {
      x = f.x1;
      y = f.y0 + t;
    } else if ((t -= h) < w) {
      x = f.x1 - t;
      y = f.y1;
    } else {
      t -= w;
      x = f.x0;
      y = f.y1 - t;
    }
    // Keep wall points inside the scene extent (the far edges are closed).
    x = std::min(x, spec.width_m);
    y = std::min(y, spec.height_m);
    emit.emit(x, y, rng.uniform(obj.z_base, obj.z_top));
  }
}

}  // namespace

void SceneSpec::validate() const {
  if (!(width_m > 0.0) || !(height_m > 0.0) || !std::isfinite(width_m) ||
      !std::isfinite(height_m)) {
    throw ConfigError("scene extent must be positive and finite");
  }
  if (!(density > 0.0) || !std::isfinite(density)) {
    throw ConfigError("scene density must be positive");
  }
  if (objects.empty()) throw ConfigError("scene has no objects");
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const SceneObject& o = objects[i];
    const std::string which = "scene object " + std::to_string(i);
    if (!is_class_id(o.label)) throw ConfigError(which + ": class id out of range");
    const Rect& f = o.footprint;
    if (!(f.x1 > f.x0) || !(f.y1 > f.y0)) throw ConfigError(which + ": degenerate footprint");
    if (f.x0 < 0.0 || f.y0 < 0.0 || f.x1 > width_m || f.y1 > height_m) {
      throw ConfigError(which + ": footprint outside the scene extent");
    }
    if (o.z_top < o.z_base) throw ConfigError(which + ": z_top below z_base");
  }
}

std::uint64_t expected_point_count(const SceneSpec& spec) {
  std::uint64_t total = 0;
  for (const SceneObject& o : spec.objects) {
    if (spec.sampling == Sampling::kLattice) {
      total += lattice_count(o.footprint, lattice_pitch(spec));
    } else {
      total += surface_count(o.footprint.area(), spec.density);
    }
    if (o.kind == ObjectKind::kBox && o.walls) total += surface_count(wall_area(o), spec.density);
  }
  return total;
}

std::vector<Point> generate_synthetic_city(const SceneSpec& spec) {
  spec.validate();
  std::vector<Point> points;
  points.reserve(static_cast<std::size_t>(expected_point_count(spec)));

  for (std::size_t i = 0; i < spec.objects.size(); ++i) {
    const SceneObject& obj = spec.objects[i];
    Rng rng(mix_seed(spec.rng_seed, i));
    Emitter emit(points, obj, rng);
    switch (obj.kind) {
      case ObjectKind::kPlane:
        emit_surface(spec, obj, obj.z_base, obj.z_base + kZJitter, emit, rng);
        break;
      case ObjectKind::kBox:
        emit_surface(spec, obj, obj.z_top, obj.z_top + kZJitter, emit, rng);
        if (obj.walls) emit_walls(spec, obj, emit, rng);
        break;
      case ObjectKind::kColumn:
        emit_surface(spec, obj, obj.z_base, obj.z_top, emit, rng);
        break;
    }
  }
  return points;
}

SceneSpec flat_scene(double width, double height, double density, std::uint64_t seed) {
  SceneSpec spec;
  spec.width_m = width;
  spec.height_m = height;
  spec.density = density;
  spec.rng_seed = seed;
  spec.objects.push_back({ObjectKind::kPlane, 0, {0.0, 0.0, width, height}, 0.0, 0.0, false});
  return spec;
}

SceneSpec mosaic_scene(double width, double height, double density, std::uint64_t seed,
                       Sampling sampling) {
  static constexpr std::array<ClassId, 6> kFlatClasses = {0, 2, 5, 7, 10, 12};
  constexpr double kPatch = 5.0;
  SceneSpec spec;
  spec.width_m = width;
  spec.height_m = height;
  spec.density = density;
  spec.rng_seed = seed;
  spec.sampling = sampling;
  Rng rng(mix_seed(seed, 0xA11CE));
  for (double x = 0.0; x < width; x += kPatch) {
    for (double y = 0.0; y < height; y += kPatch) {
      SceneObject patch;
      patch.kind = ObjectKind::kPlane;
      patch.label = kFlatClasses[static_cast<std::size_t>(rng.integer(0, kFlatClasses.size() - 1))];
      patch.footprint = {x, y, std::min(x + kPatch, width), std::min(y + kPatch, height)};
      patch.z_base = rng.uniform(0.0, 10.0);
      patch.z_top = patch.z_base;
      spec.objects.push_back(patch);
    }
  }
  return spec;
}

SceneSpec roof_scene(double width, double height, double density, const Rect& roof,
                     double roof_z, std::uint64_t seed) {
  SceneSpec spec = flat_scene(width, height, density, seed);
  spec.objects.push_back({ObjectKind::kBox, 2, roof, 0.0, roof_z, false});
  return spec;
}

SceneSpec city_scene(double width, double height, double density, std::uint64_t seed) {
  constexpr double kBlock = 20.0;
  constexpr double kRoad = 4.0;
  SceneSpec spec;
  spec.width_m = width;
  spec.height_m = height;
  spec.density = density;
  spec.rng_seed = seed;
  Rng rng(mix_seed(seed, 0xC17E));

  auto add = [&](ObjectKind kind, ClassId label, Rect r, double z0, double z1, bool walls) {
    r.x1 = std::min(r.x1, width);
    r.y1 = std::min(r.y1, height);
    if (r.x1 <= r.x0 || r.y1 <= r.y0) return;
    spec.objects.push_back({kind, label, r, z0, z1, walls});
  };

  // Blocks separated by roads along the block's low x and low y edges.
  for (double bx = 0.0; bx < width; bx += kBlock) {
    for (double by = 0.0; by < height; by += kBlock) {
      const double bx1 = std::min(bx + kBlock, width);
      const double by1 = std::min(by + kBlock, height);
      const double rx = std::min(bx + kRoad, bx1);
      const double ry = std::min(by + kRoad, by1);
      add(ObjectKind::kPlane, 7, {bx, by, rx, by1}, 0.0, 0.0, false);
      add(ObjectKind::kPlane, 7, {rx, by, bx1, ry}, 0.0, 0.0, false);
      if (rx >= bx1 || ry >= by1) continue;

      const Rect lot{rx, ry, bx1, by1};
      const ClassId ground = rng.uniform() < 0.2 ? ClassId{5} : ClassId{0};
      add(ObjectKind::kPlane, ground, lot, 0.0, 0.0, false);

      if (rng.uniform() < 0.15) {
        // Car parked on the road strip.
        const double cx = rng.uniform(bx, std::max(bx, rx - 2.0));
        const double cy = rng.uniform(by + kRoad, std::max(by + kRoad, by1 - 4.5));
        add(ObjectKind::kBox, 9, {cx, cy, cx + 1.8, cy + 4.5}, 0.0, 1.5, false);
      }

      const double lw = lot.width();
      const double lh = lot.height();
      if (lw > 6.0 && lh > 6.0 && rng.uniform() < 0.75) {
        const double w = rng.uniform(4.0, lw - 2.0);
        const double h = rng.uniform(4.0, lh - 2.0);
        const double x0 = rng.uniform(lot.x0 + 1.0, lot.x1 - 1.0 - w);
        const double y0 = rng.uniform(lot.y0 + 1.0, lot.y1 - 1.0 - h);
        const bool walls = rng.uniform() < 0.5;  // photogrammetric roofs often lack walls
        add(ObjectKind::kBox, 2, {x0, y0, x0 + w, y0 + h}, 0.0, rng.uniform(4.0, 20.0), walls);
      }
      const int trees = rng.integer(0, 3);
      for (int t = 0; t < trees; ++t) {
        const double r = rng.uniform(0.8, 2.5);
        if (lw <= 2.0 * r || lh <= 2.0 * r) continue;
        const double cx = rng.uniform(lot.x0 + r, lot.x1 - r);
        const double cy = rng.uniform(lot.y0 + r, lot.y1 - r);
        add(ObjectKind::kColumn, 1, {cx - r, cy - r, cx + r, cy + r}, 0.5,
            rng.uniform(3.0, 9.0), false);
      }
      if (rng.uniform() < 0.3) {
        const double px = rng.uniform(lot.x0, lot.x1 - 0.3);
        const double py = rng.uniform(lot.y0, lot.y1 - 0.3);
        add(ObjectKind::kColumn, 8, {px, py, px + 0.3, py + 0.3}, 0.0, 3.0, false);
      }
    }
  }
  return spec;
}

}  // namespace bevgrid
