#include "bevgrid/bundle_io.hpp"

#include <png.h>

#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>

#include "bevgrid/parallel.hpp"

namespace bevgrid {
namespace {

using nlohmann::json;

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using File = std::unique_ptr<std::FILE, FileCloser>;

File open_file(const std::filesystem::path& path, const char* mode) {
  File f(std::fopen(path.c_str(), mode));
  if (!f) {
    throw Error(std::string(mode[0] == 'w' ? "cannot write '" : "cannot open '") + path.string() +
                "'");
  }
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg) {
  auto* err = static_cast<std::string*>(png_get_error_ptr(png));
  if (err) *err = msg;
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

template <typename T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw Error(std::string("missing key '") + key + "'");
  return j.at(key).get<T>();
}

std::filesystem::path bundle_file(const std::filesystem::path& dir, const std::string& stem,
                                  const char* part) {
  return dir / (stem + "_" + part);
}

}  // namespace

void write_png(const std::filesystem::path& path, const PngImage& image) {
  if ((image.channels != 1 && image.channels != 3) ||
      (image.bit_depth != 8 && image.bit_depth != 16)) {
    throw Error("unsupported PNG layout for '" + path.string() + "'");
  }
  const std::size_t row_samples = static_cast<std::size_t>(image.width) * image.channels;
  if (image.samples.size() != row_samples * image.height) {
    throw Error("PNG sample count does not match dimensions for '" + path.string() + "'");
  }
  File f = open_file(path, "wb");

  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error("libpng initialization failed");
  }
  const std::size_t bytes_per_sample = image.bit_depth / 8;
  std::vector<png_byte> row(row_samples * bytes_per_sample);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("failed writing PNG '" + path.string() + "': " + err);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, image.width, image.height, image.bit_depth,
               image.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y) {
    const std::uint16_t* src = image.samples.data() + static_cast<std::size_t>(y) * row_samples;
    for (std::size_t i = 0; i < row_samples; ++i) {
      if (bytes_per_sample == 2) {
        row[2 * i] = static_cast<png_byte>(src[i] >> 8);  // PNG is big-endian
        row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xFF);
      } else {
        row[i] = static_cast<png_byte>(src[i]);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

PngImage read_png(const std::filesystem::path& path) {
  File f = open_file(path, "rb");
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("libpng initialization failed");
  }
  PngImage image;
  std::vector<png_byte> row;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("failed reading PNG '" + path.string() + "': " + err);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const auto color = png_get_color_type(png, info);
  image.width = static_cast<int>(png_get_image_width(png, info));
  image.height = static_cast<int>(png_get_image_height(png, info));
  image.bit_depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && image.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  image.bit_depth = png_get_bit_depth(png, info);
  image.channels = png_get_channels(png, info);
  if ((image.channels != 1 && image.channels != 3) ||
      (image.bit_depth != 8 && image.bit_depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error("unsupported PNG layout in '" + path.string() + "'");
  }
  const std::size_t row_samples = static_cast<std::size_t>(image.width) * image.channels;
  const std::size_t bytes_per_sample = image.bit_depth / 8;
  row.resize(row_samples * bytes_per_sample);
  image.samples.resize(row_samples * image.height);
  for (int y = 0; y < image.height; ++y) {
    png_read_row(png, row.data(), nullptr);
    std::uint16_t* dst = image.samples.data() + static_cast<std::size_t>(y) * row_samples;
    for (std::size_t i = 0; i < row_samples; ++i) {
      dst[i] = bytes_per_sample == 2
                   ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
                   : row[i];
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

std::uint16_t encode_altitude(double z, double z_min, double z_max) {
  if (!(z_max > z_min)) return 0;
  const double v = std::round((z - z_min) / (z_max - z_min) * 65535.0);
  return static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
}

double decode_altitude(std::uint16_t v, double z_min, double z_max) {
  if (!(z_max > z_min)) return z_min;
  return z_min + (z_max - z_min) * (static_cast<double>(v) / 65535.0);
}

json to_json(const WindowMeta& m) {
  return json{{"window_id", m.window_id},   {"cell_id", m.cell_id},   {"win_x", m.win_x},
              {"win_y", m.win_y},           {"x_s", m.x_s},           {"y_s", m.y_s},
              {"width_px", m.width_px},     {"height_px", m.height_px}, {"z_min", m.z_min},
              {"z_max", m.z_max},           {"point_count", m.point_count},
              {"g_scale", m.g_scale},       {"clamp_x", m.clamp_x},   {"clamp_y", m.clamp_y}};
}

WindowMeta window_meta_from_json(const json& j) {
  WindowMeta m;
  m.window_id = required<std::uint32_t>(j, "window_id");
  m.cell_id = required<std::uint32_t>(j, "cell_id");
  m.win_x = required<std::uint32_t>(j, "win_x");
  m.win_y = required<std::uint32_t>(j, "win_y");
  m.x_s = required<double>(j, "x_s");
  m.y_s = required<double>(j, "y_s");
  m.width_px = required<int>(j, "width_px");
  m.height_px = required<int>(j, "height_px");
  m.z_min = required<double>(j, "z_min");
  m.z_max = required<double>(j, "z_max");
  m.point_count = required<std::uint64_t>(j, "point_count");
  m.g_scale = required<double>(j, "g_scale");
  m.clamp_x = required<bool>(j, "clamp_x");
  m.clamp_y = required<bool>(j, "clamp_y");
  return m;
}

json to_json(const ProjectionConfig& c) {
  return json{{"g_scale", c.g_scale},     {"g_size", c.g_size},
              {"g_step", c.g_step},       {"cell_side", c.cell_side},
              {"completion_iterations", c.completion_iterations}, {"kernel", c.kernel}};
}

ProjectionConfig projection_config_from_json(const json& j) {
  ProjectionConfig c;
  c.g_scale = required<double>(j, "g_scale");
  c.g_size = required<double>(j, "g_size");
  c.g_step = required<double>(j, "g_step");
  c.cell_side = required<double>(j, "cell_side");
  c.completion_iterations = required<int>(j, "completion_iterations");
  c.kernel = required<int>(j, "kernel");
  return c;
}

json to_json(const Manifest& m) {
  json windows = json::array();
  for (const WindowMeta& w : m.windows) {
    windows.push_back({{"bundle", bundle_name(w)}, {"meta", to_json(w)}});
  }
  json bounds = nullptr;
  if (!m.bounds.empty()) {
    bounds = {{"min_x", m.bounds.min_x},
              {"min_y", m.bounds.min_y},
              {"max_x", m.bounds.max_x},
              {"max_y", m.bounds.max_y}};
  }
  return json{{"config", to_json(m.config)},
              {"bounds", bounds},
              {"point_count", m.point_count},
              {"uncovered_points", m.uncovered_points},
              {"windows", windows}};
}

Manifest manifest_from_json(const json& j) {
  Manifest m;
  m.config = projection_config_from_json(required<json>(j, "config"));
  m.config.validate();
  const json& b = j.at("bounds");
  if (!b.is_null()) {
    m.bounds.min_x = required<double>(b, "min_x");
    m.bounds.min_y = required<double>(b, "min_y");
    m.bounds.max_x = required<double>(b, "max_x");
    m.bounds.max_y = required<double>(b, "max_y");
  }
  m.point_count = required<std::uint64_t>(j, "point_count");
  m.uncovered_points = required<std::uint64_t>(j, "uncovered_points");
  for (const json& w : required<json>(j, "windows")) {
    m.windows.push_back(window_meta_from_json(w.at("meta")));
  }
  return m;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("invalid JSON in '" + path.string() + "': " + e.what());
  }
}

void write_bundle(const std::filesystem::path& dir, const WindowMeta& meta,
                  const RasterSet& raster, const std::string& suffix) {
  const std::string stem = bundle_name(meta) + suffix;
  const std::size_t n = raster.pixel_count();

  PngImage rgb{raster.width, raster.height, 3, 8, {}};
  rgb.samples.assign(raster.rgb.begin(), raster.rgb.end());
  write_png(bundle_file(dir, stem, "rgb.png"), rgb);

  PngImage alt{raster.width, raster.height, 1, 16, std::vector<std::uint16_t>(n, 0)};
  PngImage label{raster.width, raster.height, 1, 8, std::vector<std::uint16_t>(n, kUnlabeled)};
  PngImage mask{raster.width, raster.height, 1, 8, std::vector<std::uint16_t>(n, 0)};
  for (std::size_t i = 0; i < n; ++i) {
    if (!raster.mask[i]) continue;
    alt.samples[i] = encode_altitude(raster.alt[i], meta.z_min, meta.z_max);
    label.samples[i] = raster.label[i];
    mask.samples[i] = 255;
  }
  write_png(bundle_file(dir, stem, "alt.png"), alt);
  write_png(bundle_file(dir, stem, "label.png"), label);
  write_png(bundle_file(dir, stem, "mask.png"), mask);
  write_json(bundle_file(dir, stem, "meta.json"), to_json(meta));
}

Bundle read_bundle(const std::filesystem::path& dir, const std::string& stem) {
  Bundle b;
  b.meta = window_meta_from_json(read_json(bundle_file(dir, stem, "meta.json")));
  const int w = b.meta.width_px;
  const int h = b.meta.height_px;
  const auto rgb = read_png(bundle_file(dir, stem, "rgb.png"));
  const auto alt = read_png(bundle_file(dir, stem, "alt.png"));
  const auto label = read_png(bundle_file(dir, stem, "label.png"));
  const auto mask = read_png(bundle_file(dir, stem, "mask.png"));
  const auto check = [&](const PngImage& img, int channels, int depth, const char* part) {
    if (img.width != w || img.height != h || img.channels != channels || img.bit_depth != depth) {
      throw Error("bundle " + stem + ": " + part + " image does not match its metadata");
    }
  };
  check(rgb, 3, 8, "rgb");
  check(alt, 1, 16, "alt");
  check(label, 1, 8, "label");
  check(mask, 1, 8, "mask");

  b.raster = RasterSet::nodata(w, h);
  for (std::size_t i = 0; i < b.raster.pixel_count(); ++i) {
    if (mask.samples[i] == 0) continue;
    b.raster.mask[i] = 1;
    b.raster.label[i] = static_cast<ClassId>(label.samples[i]);
    b.raster.alt[i] = decode_altitude(alt.samples[i], b.meta.z_min, b.meta.z_max);
    for (int c = 0; c < 3; ++c) {
      b.raster.rgb[3 * i + c] = static_cast<std::uint8_t>(rgb.samples[3 * i + c]);
    }
  }
  return b;
}

void write_projection(const std::filesystem::path& dir, const ProjectionResult& result,
                      unsigned jobs) {
  std::filesystem::create_directories(dir);
  parallel_for(result.rasters.size(), jobs, [&](std::size_t i) {
    write_bundle(dir, result.manifest.windows[i], result.rasters[i]);
  });
  write_json(dir / kManifestFile, to_json(result.manifest));
}

Manifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / kManifestFile;
  try {
    return manifest_from_json(read_json(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error("malformed manifest '" + path.string() + "': " + e.what());
  }
}

void write_prediction(const std::filesystem::path& dir, const WindowMeta& meta,
                      const PredictionRaster& pred) {
  PngImage img{pred.width, pred.height, 1, 8, {}};
  img.samples.assign(pred.label.begin(), pred.label.end());
  write_png(bundle_file(dir, bundle_name(meta), "label.png"), img);
}

PredictionRaster read_prediction(const std::filesystem::path& dir, const WindowMeta& meta) {
  const auto path = bundle_file(dir, bundle_name(meta), "label.png");
  if (!std::filesystem::exists(path)) {
    throw Error("missing prediction raster for window " + bundle_name(meta) + " (" +
                path.string() + ")");
  }
  const PngImage img = read_png(path);
  if (img.channels != 1 || img.bit_depth != 8) {
    throw Error("prediction '" + path.string() + "' must be 8-bit grayscale");
  }
  PredictionRaster pred{meta.window_id, img.width, img.height, {}};
  pred.label.reserve(img.samples.size());
  for (auto v : img.samples) {
    if (!is_valid_label(v)) {
      throw Error("prediction '" + path.string() + "' holds invalid class id " +
                  std::to_string(v));
    }
    pred.label.push_back(static_cast<ClassId>(v));
  }
  return pred;
}

std::vector<PredictionRaster> read_predictions(const std::filesystem::path& dir,
                                               const Manifest& manifest, unsigned jobs) {
  std::vector<PredictionRaster> preds(manifest.windows.size());
  parallel_for(preds.size(), jobs,
               [&](std::size_t i) { preds[i] = read_prediction(dir, manifest.windows[i]); });
  return preds;
}

}  // namespace bevgrid
