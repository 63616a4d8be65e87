#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "bevgrid/analysis.hpp"
#include "bevgrid/completion.hpp"
#include "bevgrid/projection.hpp"
#include "bevgrid/synthetic.hpp"

namespace bevgrid {

enum class ScenePreset { kFlat, kMosaic, kRoof, kCity };

std::string_view to_string(ScenePreset s);
std::string_view to_string(Sampling s);

/// Everything a CLI run needs. Serialized as a flat `key = value` text file;
/// `#` starts a comment line.
struct PipelineConfig {
  ProjectionConfig projection;

  // completion
  LabelStrategy label_strategy = LabelStrategy::kMajority;
  bool in_place = false;
  bool complete = true;  // run completion inside `pipeline`

  // analysis
  std::vector<double> probe_scales{kDefaultProbeScales.begin(), kDefaultProbeScales.end()};
  double analysis_cell = 1.0;
  int curve_bins = 100;
  OverlapDenominator denominator = OverlapDenominator::kAllPoints;

  // metrics
  double weight_offset = 1.02;

  // synthetic scenes
  ScenePreset scene = ScenePreset::kCity;
  double scene_width = 50.0;
  double scene_height = 50.0;
  double density = 20.0;
  Sampling sampling = Sampling::kUniform;
  std::uint64_t seed = 0;

  // paths
  std::string input;
  std::string output;
  std::string bundles;
  std::string predictions;
  std::string ground_truth;
  std::string segmenter;

  unsigned jobs = 1;
  std::uint64_t max_window_pixels = 1ull << 26;

  /// Throws ConfigError naming the offending key.
  void validate() const;

  /// Assigns one key from its text form. Throws ConfigError on an unknown key
  /// or unparsable value.
  void set(std::string_view key, std::string_view value);

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Every key in serialization order.
const std::vector<std::string>& config_keys();

std::string serialize(const PipelineConfig& cfg);
/// Keys present in `text` override `base`.
PipelineConfig parse_config(std::string_view text, PipelineConfig base = {});

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base = {});
void save_config(const std::filesystem::path& path, const PipelineConfig& cfg);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);

}  // namespace bevgrid
