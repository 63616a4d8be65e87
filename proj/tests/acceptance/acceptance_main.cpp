// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bevgrid/analysis.hpp"
#include "bevgrid/bundle_io.hpp"
#include "bevgrid/completion.hpp"
#include "bevgrid/config.hpp"
#include "bevgrid/metrics.hpp"
#include "bevgrid/pointcloud_io.hpp"
#include "bevgrid/projection.hpp"
#include "bevgrid/synthetic.hpp"
#include "brute_force.hpp"
#include "test_util.hpp"

using namespace bevgrid;
namespace fs = std::filesystem;

namespace {

// Collects the first few failure messages of one criterion.
struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      std::ostringstream s;
      s.precision(17);
      s << what << ": got " << got << ", want " << want;
      failures.push_back(s.str());
    }
  }
};

int failed = 0;

void criterion(const std::string& name, const std::function<void(Check&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Check c;
  try {
    body(c);
  } catch (const std::exception& e) {
    c.failures.push_back(std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%s %s (%.2fs)\n", c.failures.empty() ? "PASS" : "FAIL", name.c_str(), secs);
  for (std::size_t i = 0; i < c.failures.size() && i < 5; ++i) {
    std::printf("    %s\n", c.failures[i].c_str());
  }
  if (c.failures.size() > 5) std::printf("    ... %zu more\n", c.failures.size() - 5);
  std::fflush(stdout);
  failed += !c.failures.empty();
}

std::string id(const std::string& what, std::size_t n) { return what + " #" + std::to_string(n); }

// Random multi-object scene of at most ~1e5 points.
SceneSpec random_spec(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SceneSpec s;
  s.width_m = 10.0 + 50.0 * u(rng);
  s.height_m = 10.0 + 50.0 * u(rng);
  s.density = 4.0 + 26.0 * u(rng);
  s.rng_seed = rng();
  s.sampling = u(rng) < 0.5 ? Sampling::kUniform : Sampling::kLattice;
  s.objects.push_back({ObjectKind::kPlane, 0, Rect{0, 0, s.width_m, s.height_m}, 0.0, 0.0, false});
  const int n = 2 + static_cast<int>(u(rng) * 10);
  for (int i = 0; i < n; ++i) {
    SceneObject o;
    o.kind = static_cast<ObjectKind>(static_cast<int>(u(rng) * 3));
    o.label = static_cast<ClassId>(1 + static_cast<int>(u(rng) * 12));
    const double w = 1.0 + u(rng) * s.width_m / 3, h = 1.0 + u(rng) * s.height_m / 3;
    const double x = u(rng) * (s.width_m - w), y = u(rng) * (s.height_m - h);
    o.footprint = Rect{x, y, x + w, y + h};
    o.z_base = o.kind == ObjectKind::kPlane ? 0.2 * u(rng) : 0.0;
    o.z_top = o.kind == ObjectKind::kPlane ? o.z_base : 1.0 + 20.0 * u(rng);
    o.walls = o.kind == ObjectKind::kBox && u(rng) < 0.5;
    s.objects.push_back(o);
  }
  while (expected_point_count(s) > 100000) s.density *= 0.8;
  return s;
}

ProjectionConfig random_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProjectionConfig c;
  const double scales[] = {0.03, 0.05, 0.07, 0.1, 0.2};
  c.g_scale = scales[static_cast<int>(u(rng) * 5)];
  c.g_size = 4.0 + 16.0 * u(rng);
  c.g_step = u(rng) < 0.5 ? c.g_size : c.g_size * (0.3 + 0.7 * u(rng));
  c.cell_side = c.g_size * (1.0 + 3.0 * u(rng));
  return c;
}

struct Scene {
  std::vector<Point> cloud;
  ProjectionConfig config;
};

std::vector<Scene> random_scenes() {
  std::mt19937_64 rng(20240611);
  std::vector<Scene> out;
  for (int i = 0; i < 20; ++i) {
    Scene s;
    s.cloud = generate_synthetic_city(random_spec(rng));
    if (i % 3 == 1) {
      for (std::size_t k = 0; k < s.cloud.size(); k += 13) s.cloud[k].label = kUnlabeled;
    }
    s.config = random_config(rng);
    out.push_back(std::move(s));
  }
  return out;
}

ConfusionMatrix from_counts(const std::vector<std::vector<int>>& m) {
  ConfusionMatrix cm;
  for (std::size_t g = 0; g < m.size(); ++g) {
    for (std::size_t p = 0; p < m[g].size(); ++p) {
      for (int k = 0; k < m[g][p]; ++k) cm.add(static_cast<ClassId>(g), static_cast<ClassId>(p));
    }
  }
  return cm;
}

bool same_tree(const fs::path& a, const fs::path& b, std::size_t& files, std::string& diff) {
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || testutil::slurp(e.path()) != testutil::slurp(b / rel)) {
      diff = rel.string();
      return false;
    }
    ++files;
  }
  std::size_t other = 0;
  for (const auto& e : fs::recursive_directory_iterator(b)) other += e.is_regular_file();
  if (other != files) diff = "file count differs";
  return other == files;
}

}  // namespace

int main() {
  criterion("geometry: 25x25 m cloud at 0.05 m yields one 500x500 bundle", [](Check& c) {
    auto cloud = testutil::random_cloud(20000, 25.0, 25.0, 5.0, 7);
    cloud[0].x = cloud[0].y = 0.0;
    cloud[1].x = cloud[1].y = 25.0;
    testutil::TempDir dir;
    write_points(dir / "c.bevp", cloud);
    c.expect(testutil::run_cli("project -i c.bevp -o out", dir.path().string()) == 0,
             "project exited nonzero");
    const Manifest m = read_manifest(dir / "out");
    c.expect(m.windows.size() == 1, "window count " + std::to_string(m.windows.size()));
    c.expect(m.windows.at(0).width_px == 500 && m.windows.at(0).height_px == 500, "raster size");
    for (const char* part : {"_rgb.png", "_alt.png", "_label.png", "_mask.png"}) {
      const auto png = read_png(dir / "out" / (bundle_name(m.windows[0]) + part));
      c.expect(png.width == 500 && png.height == 500, std::string(part) + " is not 500x500");
    }
  });

  criterion("lossless round trip: pipeline --oracle on single-layer scenes", [](Check& c) {
    struct Case {
      SceneSpec spec;
      const char* name;
    };
    const std::vector<Case> cases = {{mosaic_scene(20.0, 20.0, 25.0, 1), "mosaic 1e4"},
                                     {mosaic_scene(60.0, 50.0, 25.0, 2), "mosaic 7.5e4"},
                                     {flat_scene(40.0, 40.0, 25.0, 3), "flat 4e4"}};
    for (Case k : cases) {
      k.spec.sampling = Sampling::kLattice;
      const auto cloud = generate_synthetic_city(k.spec);
      c.expect(cloud.size() >= 10000 && cloud.size() <= 100000, std::string(k.name) + " size");
      testutil::TempDir dir;
      write_points(dir / "c.bevp", cloud);
      c.expect(testutil::run_cli("pipeline -i c.bevp -o run --oracle", dir.path().string()) == 0,
               std::string(k.name) + ": pipeline exited nonzero");
      const auto metrics = read_json(dir / "run" / "metrics.json");
      c.expect(metrics["miou"].get<double>() == 1.0, std::string(k.name) + ": mIoU != 1");
      c.expect(read_labels(dir / "run" / "pred.labels") == labels_of(cloud),
               std::string(k.name) + ": remapped labels differ from ground truth");
    }
  });

  const std::vector<Scene> scenes = random_scenes();

  criterion("brute-force equivalence on 20 random scenes", [&](Check& c) {
    for (std::size_t i = 0; i < scenes.size(); ++i) {
      const auto& [cloud, config] = scenes[i];
      c.expect(cloud.size() <= 100000, id("scene too large", i));
      for (double probe : kDefaultProbeScales) {
        const auto got = spatial_overlap(cloud, probe);
        const auto ref = bf::spatial_overlap(cloud, probe, 1.0);
        c.expect(got.overlapped_point_count == ref.overlapped, id("spatial count", i));
        c.near(got.spatial_overlap_ratio, ref.ratio, 1e-12, id("spatial ratio", i));
        c.expect(got.cells.size() == ref.cells.size(), id("cell count", i));
        for (const CellOverlap& cell : got.cells) {
          const auto it = ref.cells.find({cell.col, cell.row});
          c.expect(it != ref.cells.end() && it->second.first == cell.point_count &&
                       it->second.second == cell.overlapped_point_count,
                   id("cell tally", i));
        }
      }
      const auto co = class_overlap(cloud, config);
      const auto rco = bf::class_overlap(cloud, config);
      c.expect(co.uncovered == rco.uncovered && co.evaluated == rco.evaluated &&
                   co.overlapped == rco.overlapped && co.disagreeing == rco.disagreeing &&
                   co.pairs == rco.pairs,
               id("class overlap counts", i));
      c.near(co.class_overlap_ratio,
             static_cast<double>(rco.disagreeing) / static_cast<double>(rco.evaluated), 1e-12,
             id("class overlap ratio", i));

      const auto oracle = oracle_bound(cloud, config);
      const auto labels = bf::oracle_labels(cloud, config);
      c.expect(oracle.labels == labels, id("oracle labels", i));
      const auto ref = bf::score(labels_of(cloud), labels);
      c.expect(oracle.summary.evaluated == ref.evaluated, id("oracle evaluated", i));
      c.near(oracle.summary.oa, ref.oa, 1e-12, id("oracle OA", i));
      c.near(oracle.summary.macc, ref.macc, 1e-12, id("oracle mAcc", i));
      c.near(oracle.summary.miou, ref.miou, 1e-12, id("oracle mIoU", i));
    }
  });

  criterion("identity: oracle OA = 1 - class overlap ratio", [&](Check& c) {
    std::vector<Scene> all = scenes;
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      all.push_back({generate_synthetic_city(city_scene(50.0, 50.0, 20.0, seed)), ProjectionConfig{}});
    }
    auto roof = roof_scene(20.0, 20.0, 25.0, Rect{5, 5, 15, 15}, 5.0, 1);
    roof.sampling = Sampling::kLattice;
    all.push_back({generate_synthetic_city(roof), ProjectionConfig{}});
    for (std::size_t i = 0; i < all.size(); ++i) {
      const auto oa = oracle_bound(all[i].cloud, all[i].config).summary.oa;
      const auto ratio = class_overlap(all[i].cloud, all[i].config).class_overlap_ratio;
      c.near(oa, 1.0 - ratio, 1e-12, id("scene", i));
    }
  });

  criterion("scale monotonicity over probe scales 0.01..0.04", [&](Check& c) {
    std::vector<std::vector<Point>> clouds;
    for (const Scene& s : scenes) clouds.push_back(s.cloud);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      clouds.push_back(generate_synthetic_city(city_scene(60.0, 60.0, 20.0, seed)));
    }
    for (std::size_t i = 0; i < clouds.size(); ++i) {
      double prev = -1.0;
      for (double probe : kDefaultProbeScales) {
        const double r = spatial_overlap(clouds[i], probe).spatial_overlap_ratio;
        c.expect(r >= prev, id("decrease at scale " + format_double(probe) + " on cloud", i));
        prev = r;
      }
    }
  });

  criterion("completion contract", [](Check& c) {
    for (int k = 0; k <= 6; ++k) {
      RasterSet r = RasterSet::nodata(31, 31);
      const std::size_t seed = r.pixel(15, 15);
      r.mask[seed] = 1;
      r.label[seed] = 3;
      const RasterSet out = complete(r, k, 3);
      std::size_t inside = 0;
      for (int y = 0; y < 31; ++y) {
        for (int x = 0; x < 31; ++x) {
          const bool want = std::abs(x - 15) <= k && std::abs(y - 15) <= k;
          inside += want;
          c.expect((out.mask[out.pixel(x, y)] != 0) == want, id("square shape, k", k));
        }
      }
      c.expect(out.masked_count() == inside &&
                   inside == static_cast<std::size_t>((2 * k + 1) * (2 * k + 1)),
               id("square size, k", k));
    }

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<int> dim(1, 48), lab(0, 12), col(0, 255);
    for (int t = 0; t < 100; ++t) {
      RasterSet in = RasterSet::nodata(dim(rng), dim(rng));
      const double fill = 0.02 + 0.6 * u(rng);
      for (std::size_t i = 0; i < in.pixel_count(); ++i) {
        if (u(rng) >= fill) continue;
        in.mask[i] = 1;
        in.label[i] = static_cast<ClassId>(lab(rng));
        in.alt[i] = 40.0 * u(rng);
        for (int ch = 0; ch < 3; ++ch) in.rgb[3 * i + ch] = static_cast<std::uint8_t>(col(rng));
        in.winner_index[i] = i;
      }
      const RasterSet out = complete(in, 1 + t % 6, t % 2 ? 3 : 5,
                                     t % 3 ? LabelStrategy::kMajority : LabelStrategy::kMaxId);
      bool kept = true;
      for (std::size_t i = 0; i < in.pixel_count(); ++i) {
        if (!in.mask[i]) continue;
        kept = kept && out.mask[i] && out.label[i] == in.label[i] && out.alt[i] == in.alt[i] &&
               out.winner_index[i] == in.winner_index[i] && out.rgb[3 * i] == in.rgb[3 * i] &&
               out.rgb[3 * i + 1] == in.rgb[3 * i + 1] && out.rgb[3 * i + 2] == in.rgb[3 * i + 2];
      }
      c.expect(kept, id("observed pixel changed, raster", t));

      RasterSet dense = in;
      for (std::size_t i = 0; i < dense.pixel_count(); ++i) {
        dense.mask[i] = 1;
        if (dense.label[i] == kUnlabeled) dense.label[i] = 0;
      }
      c.expect(complete(dense, 5, 3) == dense, id("dense raster not a fixed point", t));
    }
  });

  criterion("metrics suite", [](Check& c) {
    ConfusionMatrix direct;
    direct.accumulate(std::vector<ClassId>{0, 0, 1}, std::vector<ClassId>{0, 1, 1});
    c.expect(direct.at(0, 0) == 1 && direct.at(0, 1) == 1 && direct.at(1, 1) == 1 &&
                 direct.total() == 3,
             "gt [0,0,1] vs pred [0,1,1] counts");

    const auto s = summarize(from_counts({{5, 5}, {0, 10}}));
    c.near(s.oa, 15.0 / 20.0, 1e-12, "[[5,5],[0,10]] OA");
    c.near(s.macc, (5.0 / 10.0 + 10.0 / 10.0) / 2.0, 1e-12, "[[5,5],[0,10]] mAcc");
    c.near(*s.iou[0], 5.0 / 10.0, 1e-12, "[[5,5],[0,10]] IoU0");
    c.near(*s.iou[1], 10.0 / 15.0, 1e-12, "[[5,5],[0,10]] IoU1");
    c.near(s.miou, (5.0 / 10.0 + 10.0 / 15.0) / 2.0, 1e-12, "[[5,5],[0,10]] mIoU");

    const auto p = summarize(from_counts({{7, 0, 0}, {0, 3, 0}, {0, 0, 9}}));
    c.expect(p.oa == 1.0 && p.macc == 1.0 && p.miou == 1.0, "perfect diagonal");

    std::mt19937_64 rng(23);
    std::uniform_int_distribution<int> cnt(0, 40), sparse(0, 3);
    std::uniform_int_distribution<int> lab(0, 12);
    for (int t = 0; t < 1000; ++t) {
      std::vector<std::vector<int>> m(kNumClasses, std::vector<int>(kNumClasses));
      for (auto& row : m) {
        for (auto& v : row) v = sparse(rng) == 0 ? cnt(rng) : 0;
      }
      m[lab(rng)][lab(rng)] += 1;
      const auto r = summarize(from_counts(m));
      c.expect(r.miou <= r.macc, id("mIoU > mAcc on matrix", t));
    }

    for (int t = 0; t < 50; ++t) {
      std::vector<ClassId> g[3], q[3];
      ConfusionMatrix part[3], whole;
      for (int k = 0; k < 3; ++k) {
        for (int i = 0; i < 100 + 37 * k; ++i) {
          g[k].push_back(static_cast<ClassId>(lab(rng)));
          q[k].push_back(static_cast<ClassId>(lab(rng)));
        }
        part[k].accumulate(g[k], q[k]);
        whole.accumulate(g[k], q[k]);
      }
      ConfusionMatrix left = part[0];
      left.merge(part[1]);
      left.merge(part[2]);
      ConfusionMatrix tail = part[1];
      tail.merge(part[2]);
      ConfusionMatrix right = part[0];
      right.merge(tail);
      c.expect(left == right && left == whole, id("merge not associative, trial", t));
    }
  });

  criterion("determinism: --jobs 1 and --jobs 8 artifacts are identical", [](Check& c) {
    const auto cloud = generate_synthetic_city(city_scene(50.0, 50.0, 20.0, 9));
    testutil::TempDir a, b;
    for (const testutil::TempDir* d : {&a, &b}) write_points(*d / "c.bevp", cloud);
    const std::string cmd = "pipeline -i c.bevp -o run --oracle --jobs ";
    c.expect(testutil::run_cli(cmd + "1", a.path().string()) == 0, "jobs 1 run failed");
    c.expect(testutil::run_cli(cmd + "8", b.path().string()) == 0, "jobs 8 run failed");
    const Manifest m = read_manifest(a / "run" / "bundles");
    c.expect(m.windows.size() == 4, "window count " + std::to_string(m.windows.size()));
    std::size_t files = 0;
    std::string diff;
    c.expect(same_tree(a / "run", b / "run", files, diff), "artifact differs: " + diff);
    for (const WindowMeta& w : m.windows) {
      for (const char* part : {"_rgb.png", "_alt.png", "_label.png", "_mask.png"}) {
        const std::string f = bundle_name(w) + part;
        c.expect(read_png(a / "run" / "bundles" / f) == read_png(b / "run" / "bundles" / f),
                 "pixels differ in " + f);
      }
    }
  });

  std::printf("%s\n", failed ? "acceptance: FAILED" : "acceptance: all criteria passed");
  return failed ? 1 : 0;
}
