#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevgrid/projection.hpp"
#include "bevgrid/remapping.hpp"

namespace bevgrid {

// Window bundle layout, for stem `cell{C}_win{X}_{Y}` (plus optional suffix):
//   <stem>_rgb.png    8-bit RGB
//   <stem>_alt.png    16-bit gray, round((z - z_min) / (z_max - z_min) * 65535), 0 on nodata
//   <stem>_label.png  8-bit gray, 255 on nodata
//   <stem>_mask.png   8-bit gray, 0 / 255
//   <stem>_meta.json  WindowMeta
// Image row r holds pixel row py = r (increasing y).

struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;   // 1 or 3
  int bit_depth = 0;  // 8 or 16
  std::vector<std::uint16_t> samples;  // row-major, interleaved

  friend bool operator==(const PngImage&, const PngImage&) = default;
};

void write_png(const std::filesystem::path& path, const PngImage& image);
PngImage read_png(const std::filesystem::path& path);

std::uint16_t encode_altitude(double z, double z_min, double z_max);
double decode_altitude(std::uint16_t v, double z_min, double z_max);

nlohmann::json to_json(const WindowMeta& meta);
WindowMeta window_meta_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProjectionConfig& config);
ProjectionConfig projection_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Manifest& manifest);
Manifest manifest_from_json(const nlohmann::json& j);

/// Pretty-printed, key-sorted, newline-terminated; identical input gives identical bytes.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

void write_bundle(const std::filesystem::path& dir, const WindowMeta& meta,
                  const RasterSet& raster, const std::string& suffix = "");

struct Bundle {
  WindowMeta meta;
  RasterSet raster;  // alt decoded from 16 bits; winner_index is not stored
};

Bundle read_bundle(const std::filesystem::path& dir, const std::string& stem);

inline constexpr const char* kManifestFile = "manifest.json";

/// Bundles plus manifest.json.
void write_projection(const std::filesystem::path& dir, const ProjectionResult& result,
                      unsigned jobs = 1);
Manifest read_manifest(const std::filesystem::path& dir);

/// Label PNG at `<dir>/<stem>_label.png`, the segmenter output contract.
void write_prediction(const std::filesystem::path& dir, const WindowMeta& meta,
                      const PredictionRaster& pred);
PredictionRaster read_prediction(const std::filesystem::path& dir, const WindowMeta& meta);
std::vector<PredictionRaster> read_predictions(const std::filesystem::path& dir,
                                               const Manifest& manifest, unsigned jobs = 1);

}  // namespace bevgrid
