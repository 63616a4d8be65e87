#include <gtest/gtest.h>

#include <random>

#include "bevgrid/bundle_io.hpp"
#include "bevgrid/completion.hpp"
#include "bevgrid/synthetic.hpp"
#include "test_util.hpp"

using namespace bevgrid;
using testutil::TempDir;

namespace {

ProjectionResult sample_projection() {
  ProjectionConfig c;
  c.g_scale = 0.1;
  c.g_size = c.g_step = 15.0;
  c.cell_side = 30.0;
  return project(generate_synthetic_city(city_scene(40.0, 25.0, 15.0, 3)), c);
}

}  // namespace

TEST(Png, EightAndSixteenBitRoundTrip) {
  TempDir dir;
  std::mt19937 rng(1);
  PngImage rgb{7, 5, 3, 8, {}};
  for (int i = 0; i < 7 * 5 * 3; ++i) rgb.samples.push_back(rng() % 256);
  write_png(dir / "rgb.png", rgb);
  EXPECT_EQ(read_png(dir / "rgb.png"), rgb);

  PngImage gray{4, 9, 1, 16, {}};
  for (int i = 0; i < 36; ++i) gray.samples.push_back(rng() % 65536);
  gray.samples[0] = 65535;
  gray.samples[1] = 256;
  write_png(dir / "alt.png", gray);
  EXPECT_EQ(read_png(dir / "alt.png"), gray);
}

TEST(Png, ErrorsAreReported) {
  TempDir dir;
  EXPECT_THROW(read_png(dir / "none.png"), Error);
  std::ofstream(dir / "junk.png") << "not a png";
  EXPECT_THROW(read_png(dir / "junk.png"), Error);
  EXPECT_THROW(write_png(dir / "x.png", PngImage{2, 2, 1, 8, {1, 2, 3}}), Error);
}

TEST(Altitude, EncodingRule) {
  EXPECT_EQ(encode_altitude(0.0, 0.0, 10.0), 0);
  EXPECT_EQ(encode_altitude(10.0, 0.0, 10.0), 65535);
  EXPECT_EQ(encode_altitude(5.0, 0.0, 10.0), 32768);  // round(32767.5)
  EXPECT_EQ(encode_altitude(2.0, 2.0, 2.0), 0);
  for (int v : {0, 1, 1000, 65534, 65535}) {
    EXPECT_EQ(encode_altitude(decode_altitude(v, -3.7, 41.2), -3.7, 41.2), v);
  }
}

TEST(Bundle, FilesAndNaming) {
  TempDir dir;
  const auto proj = sample_projection();
  write_projection(dir.path(), proj);
  for (const auto& w : proj.manifest.windows) {
    const std::string stem = bundle_name(w);
    for (const char* part : {"_rgb.png", "_alt.png", "_label.png", "_mask.png", "_meta.json"}) {
      EXPECT_TRUE(std::filesystem::exists(dir / (stem + part))) << stem << part;
    }
  }
  const auto manifest = read_json(dir / "manifest.json");
  EXPECT_EQ(manifest["config"]["g_scale"], 0.1);
  EXPECT_EQ(manifest["windows"].size(), proj.manifest.windows.size());
  EXPECT_EQ(manifest["windows"][0]["bundle"], bundle_name(proj.manifest.windows[0]));
  const auto meta = read_json(dir / (bundle_name(proj.manifest.windows[0]) + "_meta.json"));
  for (const char* key : {"window_id", "cell_id", "x_s", "y_s", "width_px", "height_px", "z_min",
                          "z_max", "point_count", "g_scale"}) {
    EXPECT_TRUE(meta.contains(key)) << key;
  }
}

TEST(Bundle, ImagesEncodeTheRaster) {
  TempDir dir;
  const auto proj = sample_projection();
  const auto& meta = proj.manifest.windows[0];
  const auto& r = proj.rasters[0];
  write_bundle(dir.path(), meta, r);
  const std::string stem = bundle_name(meta);
  const auto mask = read_png(dir / (stem + "_mask.png"));
  const auto label = read_png(dir / (stem + "_label.png"));
  const auto alt = read_png(dir / (stem + "_alt.png"));
  const auto rgb = read_png(dir / (stem + "_rgb.png"));
  EXPECT_EQ(alt.bit_depth, 16);
  EXPECT_EQ(rgb.channels, 3);
  EXPECT_EQ(mask.width, r.width);
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    EXPECT_EQ(mask.samples[i], r.mask[i] ? 255 : 0);
    EXPECT_EQ(label.samples[i], r.label[i]);
    if (!r.mask[i]) {
      EXPECT_EQ(alt.samples[i], 0);
      EXPECT_EQ(label.samples[i], 255);
    } else {
      EXPECT_EQ(alt.samples[i],
                std::lround((r.alt[i] - meta.z_min) / (meta.z_max - meta.z_min) * 65535.0));
    }
  }
}

TEST(Bundle, RoundTrip) {
  TempDir dir;
  const auto proj = sample_projection();
  write_projection(dir.path(), proj, 4);
  const Manifest m = read_manifest(dir.path());
  EXPECT_EQ(m.windows, proj.manifest.windows);
  EXPECT_EQ(m.config, proj.manifest.config);
  EXPECT_EQ(m.point_count, proj.manifest.point_count);
  EXPECT_EQ(m.bounds.min_x, proj.manifest.bounds.min_x);
  EXPECT_EQ(m.bounds.max_y, proj.manifest.bounds.max_y);
  for (std::size_t w = 0; w < m.windows.size(); ++w) {
    const Bundle b = read_bundle(dir.path(), bundle_name(m.windows[w]));
    const RasterSet& r = proj.rasters[w];
    EXPECT_EQ(b.meta, m.windows[w]);
    EXPECT_EQ(b.raster.mask, r.mask);
    EXPECT_EQ(b.raster.label, r.label);
    EXPECT_EQ(b.raster.rgb, r.rgb);
    const double step = (b.meta.z_max - b.meta.z_min) / 65535.0;
    for (std::size_t i = 0; i < r.pixel_count(); ++i) {
      if (r.mask[i]) EXPECT_NEAR(b.raster.alt[i], r.alt[i], step);
    }
  }
}

TEST(Bundle, CompletedSuffix) {
  TempDir dir;
  const auto proj = sample_projection();
  const auto done = complete(proj.rasters[0], 3, 3);
  write_bundle(dir.path(), proj.manifest.windows[0], done, "_c");
  const Bundle b = read_bundle(dir.path(), bundle_name(proj.manifest.windows[0]) + "_c");
  EXPECT_EQ(b.raster.mask, done.mask);
}

TEST(Bundle, FlatWindowEncodesZeroAltitude) {
  TempDir dir;
  std::vector<Point> pts(3);
  for (int i = 0; i < 3; ++i) {
    pts[i].x = i;
    pts[i].y = i;
    pts[i].z = 4.0;
    pts[i].index = i;
  }
  const auto proj = project(pts, ProjectionConfig{});
  write_projection(dir.path(), proj);
  const auto alt = read_png(dir / "cell0_win0_0_alt.png");
  for (auto v : alt.samples) EXPECT_EQ(v, 0);
  const Bundle b = read_bundle(dir.path(), "cell0_win0_0");
  EXPECT_EQ(b.raster.alt[b.raster.pixel(20, 20)], 4.0);
}

TEST(Predictions, ReadAndValidate) {
  TempDir dir;
  const auto proj = sample_projection();
  write_projection(dir.path(), proj);
  const auto preds = read_predictions(dir.path(), proj.manifest, 2);
  ASSERT_EQ(preds.size(), proj.rasters.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(preds[i].label, proj.rasters[i].label);
    EXPECT_EQ(preds[i].window_id, proj.manifest.windows[i].window_id);
  }

  TempDir empty;
  try {
    read_predictions(empty.path(), proj.manifest);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("missing prediction raster"), std::string::npos);
  }

  const auto& w = proj.manifest.windows[0];
  write_png(dir / (bundle_name(w) + "_label.png"),
            PngImage{w.width_px, w.height_px, 1, 8,
                     std::vector<std::uint16_t>(static_cast<std::size_t>(w.width_px) * w.height_px, 40)});
  EXPECT_THROW(read_prediction(dir.path(), w), Error);
}

TEST(Manifest, MalformedIsReported) {
  TempDir dir;
  std::ofstream(dir / "manifest.json") << "{\"config\": {}}";
  EXPECT_THROW(read_manifest(dir.path()), Error);
  std::ofstream(dir / "manifest.json") << "{ not json";
  EXPECT_THROW(read_manifest(dir.path()), Error);
}
