#include "bevgrid/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace bevgrid {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, const char* what) {
  throw ConfigError("config key '" + std::string(key) + "': cannot parse '" + std::string(value) +
                    "' as " + what);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

template <typename Int>
Int to_int(std::string_view key, std::string_view v) {
  Int out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "an integer");
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true/false");
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_double(values[i]);
  }
  return out;
}

std::vector<double> split_doubles(std::string_view key, std::string_view v) {
  std::vector<double> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    out.push_back(to_double(key, trim(v.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  return out;
}

struct Field {
  std::string key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<void(PipelineConfig&, std::string_view)> set;
};

template <typename E>
Field enum_field(std::string key, E PipelineConfig::*member,
                 std::initializer_list<std::pair<std::string_view, E>> names) {
  std::vector<std::pair<std::string_view, E>> table(names);
  return {key,
          [member, table](const PipelineConfig& c) {
            for (const auto& [name, value] : table) {
              if (c.*member == value) return std::string(name);
            }
            return std::string();
          },
          [key, member, table](PipelineConfig& c, std::string_view v) {
            for (const auto& [name, value] : table) {
              if (v == name) {
                c.*member = value;
                return;
              }
            }
            std::string allowed;
            for (const auto& [name, value] : table) {
              allowed += (allowed.empty() ? "" : ", ") + std::string(name);
            }
            throw ConfigError("config key '" + key + "': '" + std::string(v) +
                              "' is not one of " + allowed);
          }};
}

Field double_field(std::string key, std::function<double&(PipelineConfig&)> ref) {
  return {key, [ref](const PipelineConfig& c) {
            return format_double(ref(const_cast<PipelineConfig&>(c)));
          },
          [key, ref](PipelineConfig& c, std::string_view v) { ref(c) = to_double(key, v); }};
}

template <typename Int>
Field int_field(std::string key, std::function<Int&(PipelineConfig&)> ref) {
  return {key, [ref](const PipelineConfig& c) {
            return std::to_string(ref(const_cast<PipelineConfig&>(c)));
          },
          [key, ref](PipelineConfig& c, std::string_view v) { ref(c) = to_int<Int>(key, v); }};
}

Field bool_field(std::string key, bool PipelineConfig::*member) {
  return {key, [member](const PipelineConfig& c) { return std::string(c.*member ? "true" : "false"); },
          [key, member](PipelineConfig& c, std::string_view v) { c.*member = to_bool(key, v); }};
}

Field string_field(std::string key, std::string PipelineConfig::*member) {
  return {key, [member](const PipelineConfig& c) { return c.*member; },
          [member](PipelineConfig& c, std::string_view v) { c.*member = std::string(v); }};
}

const std::vector<Field>& fields() {
  using C = PipelineConfig;
  static const std::vector<Field> table = {
      double_field("g_scale", [](C& c) -> double& { return c.projection.g_scale; }),
      double_field("g_size", [](C& c) -> double& { return c.projection.g_size; }),
      double_field("g_step", [](C& c) -> double& { return c.projection.g_step; }),
      double_field("cell_side", [](C& c) -> double& { return c.projection.cell_side; }),
      int_field<int>("completion_iterations",
                     [](C& c) -> int& { return c.projection.completion_iterations; }),
      int_field<int>("kernel", [](C& c) -> int& { return c.projection.kernel; }),
      enum_field("label_strategy", &C::label_strategy,
                 {{"majority", LabelStrategy::kMajority}, {"max-id", LabelStrategy::kMaxId}}),
      bool_field("in_place", &C::in_place),
      bool_field("complete", &C::complete),
      {"probe_scales", [](const C& c) { return join(c.probe_scales); },
       [](C& c, std::string_view v) { c.probe_scales = split_doubles("probe_scales", v); }},
      double_field("analysis_cell", [](C& c) -> double& { return c.analysis_cell; }),
      int_field<int>("curve_bins", [](C& c) -> int& { return c.curve_bins; }),
      enum_field("denominator", &C::denominator,
                 {{"all", OverlapDenominator::kAllPoints},
                  {"overlapped", OverlapDenominator::kOverlappedPoints}}),
      double_field("weight_offset", [](C& c) -> double& { return c.weight_offset; }),
      enum_field("scene", &C::scene,
                 {{"flat", ScenePreset::kFlat},
                  {"mosaic", ScenePreset::kMosaic},
                  {"roof", ScenePreset::kRoof},
                  {"city", ScenePreset::kCity}}),
      double_field("scene_width", [](C& c) -> double& { return c.scene_width; }),
      double_field("scene_height", [](C& c) -> double& { return c.scene_height; }),
      double_field("density", [](C& c) -> double& { return c.density; }),
      enum_field("sampling", &C::sampling,
                 {{"uniform", Sampling::kUniform}, {"lattice", Sampling::kLattice}}),
      int_field<std::uint64_t>("seed", [](C& c) -> std::uint64_t& { return c.seed; }),
      string_field("input", &C::input),
      string_field("output", &C::output),
      string_field("bundles", &C::bundles),
      string_field("predictions", &C::predictions),
      string_field("ground_truth", &C::ground_truth),
      string_field("segmenter", &C::segmenter),
      int_field<unsigned>("jobs", [](C& c) -> unsigned& { return c.jobs; }),
      int_field<std::uint64_t>("max_window_pixels",
                               [](C& c) -> std::uint64_t& { return c.max_window_pixels; }),
  };
  return table;
}

const Field* find_field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("config key '" + key + "': " + what);
}

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

}  // namespace

std::string_view to_string(ScenePreset s) {
  switch (s) {
    case ScenePreset::kFlat: return "flat";
    case ScenePreset::kMosaic: return "mosaic";
    case ScenePreset::kRoof: return "roof";
    case ScenePreset::kCity: return "city";
  }
  return "city";
}

std::string_view to_string(Sampling s) {
  return s == Sampling::kLattice ? "lattice" : "uniform";
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void PipelineConfig::validate() const {
  projection.validate();
  require(!probe_scales.empty(), "probe_scales", "needs at least one scale");
  for (double s : probe_scales) require(positive(s), "probe_scales", "scales must be positive");
  require(positive(analysis_cell), "analysis_cell", "must be positive");
  require(curve_bins >= 1, "curve_bins", "must be at least 1");
  require(std::isfinite(weight_offset) && weight_offset > 1.0, "weight_offset",
          "must be greater than 1");
  require(positive(scene_width), "scene_width", "must be positive");
  require(positive(scene_height), "scene_height", "must be positive");
  require(positive(density), "density", "must be positive");
  require(jobs >= 1, "jobs", "must be at least 1");
  require(max_window_pixels >= 1, "max_window_pixels", "must be at least 1");
}

void PipelineConfig::set(std::string_view key, std::string_view value) {
  const Field* f = find_field(key);
  if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'");
  f->set(*this, trim(value));
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const Field& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

std::string serialize(const PipelineConfig& cfg) {
  std::string out;
  for (const Field& f : fields()) {
    const std::string value = f.get(cfg);
    if (value.find('\n') != std::string::npos || trim(value) != value) {
      throw ConfigError("config key '" + f.key + "': value cannot be written to a config file");
    }
    out += f.key + " = " + value + "\n";
  }
  return out;
}

PipelineConfig parse_config(std::string_view text, PipelineConfig base) {
  PipelineConfig cfg = std::move(base);
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = trim(text.substr(0, nl));
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    cfg.set(trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_config(const std::filesystem::path& path, const PipelineConfig& cfg) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << serialize(cfg);
}

}  // namespace bevgrid
