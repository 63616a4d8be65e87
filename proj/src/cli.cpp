#include "bevgrid/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <deque>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "bevgrid/bundle_io.hpp"
#include "bevgrid/parallel.hpp"
#include "bevgrid/pointcloud_io.hpp"

namespace bevgrid::cli {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// One subcommand: its flags are collected as config-key overrides and applied
// on top of (defaults <- BEVGRID_JOBS <- --config file).
struct Command {
  CLI::App* app = nullptr;
  std::string config_path;
  std::map<std::string, std::string> overrides;
  bool oracle = false;

  void option(const std::string& names, const std::string& key, const std::string& desc) {
    app->add_option_function<std::string>(
        names, [this, key](const std::string& v) { overrides[key] = v; }, desc);
  }
  void flag(const std::string& names, const std::string& key, const std::string& value,
            const std::string& desc) {
    app->add_flag_function(
        names, [this, key, value](std::int64_t) { overrides[key] = value; }, desc);
  }
  void projection_flags() {
    option("--scale", "g_scale", "meters per pixel");
    option("--size", "g_size", "window side in meters");
    option("--step", "g_step", "window stride in meters");
    option("--cell-side", "cell_side", "grid cell side in meters");
    option("--max-window-pixels", "max_window_pixels", "per-window pixel cap");
  }
  void completion_flags() {
    option("--iterations", "completion_iterations", "completion iterations");
    option("--kernel", "kernel", "odd completion kernel size");
    option("--label-strategy", "label_strategy", "majority | max-id");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg;
    if (const char* env = std::getenv("BEVGRID_JOBS"); env && *env) cfg.set("jobs", env);
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    for (const auto& [key, value] : overrides) cfg.set(key, value);
    cfg.validate();
    return cfg;
  }
};

void require_path(const std::string& value, const char* what) {
  if (value.empty()) throw ConfigError(std::string(what) + " is required");
}

void prepare_output(const PipelineConfig& cfg, const std::string& command) {
  require_path(cfg.output, "output directory (-o)");
  fs::create_directories(cfg.output);
  write_json(fs::path(cfg.output) / "run.json", run_json(command, cfg));
}

ProjectOptions project_options(const PipelineConfig& cfg) {
  ProjectOptions o;
  o.jobs = cfg.jobs;
  o.max_window_pixels = cfg.max_window_pixels;
  return o;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

SceneSpec scene_of(const PipelineConfig& cfg) {
  const double w = cfg.scene_width;
  const double h = cfg.scene_height;
  SceneSpec spec;
  switch (cfg.scene) {
    case ScenePreset::kFlat:
      spec = flat_scene(w, h, cfg.density, cfg.seed);
      break;
    case ScenePreset::kMosaic:
      spec = mosaic_scene(w, h, cfg.density, cfg.seed, cfg.sampling);
      break;
    case ScenePreset::kRoof:
      spec = roof_scene(w, h, cfg.density, Rect{w / 4, h / 4, 3 * w / 4, 3 * h / 4}, 5.0,
                        cfg.seed);
      break;
    case ScenePreset::kCity:
      spec = city_scene(w, h, cfg.density, cfg.seed);
      break;
  }
  spec.sampling = cfg.sampling;
  return spec;
}

int cmd_synth(const PipelineConfig& cfg, std::ostream& out) {
  const SceneSpec spec = scene_of(cfg);
  spec.validate();
  prepare_output(cfg, "synth");
  const auto cloud = generate_synthetic_city(spec);
  const fs::path path = fs::path(cfg.output) / "cloud.bevp";
  write_points(path, cloud);
  out << "wrote " << cloud.size() << " points to " << path.string() << "\n";
  return kOk;
}

int cmd_project(const PipelineConfig& cfg, std::ostream& out) {
  require_path(cfg.input, "input cloud (-i)");
  prepare_output(cfg, "project");
  const auto result = project_file(cfg.input, cfg.projection, project_options(cfg));
  write_projection(cfg.output, result, cfg.jobs);
  out << "projected " << result.manifest.point_count << " points into "
      << result.manifest.windows.size() << " windows\n";
  if (result.manifest.uncovered_points) {
    out << result.manifest.uncovered_points << " points fell outside every window\n";
  }
  return kOk;
}

int cmd_complete(PipelineConfig cfg, std::ostream& out) {
  require_path(cfg.input, "bundle directory (-i)");
  if (cfg.output.empty()) cfg.output = cfg.input;
  const Manifest manifest = read_manifest(cfg.input);
  prepare_output(cfg, "complete");
  if (fs::absolute(cfg.output) != fs::absolute(cfg.input)) {
    write_json(fs::path(cfg.output) / kManifestFile, to_json(manifest));
  }
  const std::string suffix = cfg.in_place ? "" : "_c";
  std::vector<std::size_t> filled(manifest.windows.size(), 0);
  parallel_for(manifest.windows.size(), cfg.jobs, [&](std::size_t i) {
    const Bundle b = read_bundle(cfg.input, bundle_name(manifest.windows[i]));
    const RasterSet done = complete(b.raster, cfg.projection.completion_iterations,
                                    cfg.projection.kernel, cfg.label_strategy);
    filled[i] = done.masked_count() - b.raster.masked_count();
    write_bundle(cfg.output, b.meta, done, suffix);
  });
  std::size_t total = 0;
  for (std::size_t f : filled) total += f;
  out << "completed " << manifest.windows.size() << " windows, filled " << total << " pixels\n";
  return kOk;
}

void write_remap(const PipelineConfig& cfg, const RemapResult& result) {
  write_labels(fs::path(cfg.output) / "pred.labels", result.labels, result.labels.size());
  write_json(fs::path(cfg.output) / "coverage.json", coverage_json(result.coverage));
}

int cmd_remap(const PipelineConfig& cfg, std::ostream& out) {
  require_path(cfg.input, "input cloud (-i)");
  require_path(cfg.bundles, "bundle directory (--bundles)");
  require_path(cfg.predictions, "prediction directory (--predictions)");
  prepare_output(cfg, "remap");
  const Manifest manifest = read_manifest(cfg.bundles);
  const auto preds = read_predictions(cfg.predictions, manifest, cfg.jobs);
  const RemapResult result = remap_file(manifest, preds, cfg.input, cfg.jobs);
  write_remap(cfg, result);
  out << "labeled " << result.coverage.labeled << " of " << result.coverage.total
      << " points (" << result.coverage.labeled_nodata << " on nodata pixels, "
      << result.coverage.outside << " outside every window)\n";
  return kOk;
}

std::string overlap_csv(const std::vector<OverlapStats>& sweep) {
  std::ostringstream csv;
  csv << "probe_scale,rank_percentile,overlap_ratio\n";
  for (const OverlapStats& s : sweep) {
    for (const CurvePoint& c : s.curve) {
      csv << format_double(s.probe_scale) << ',' << format_double(c.rank_percentile) << ','
          << format_double(c.overlap_ratio) << '\n';
    }
  }
  return csv.str();
}

int cmd_analyze(const PipelineConfig& cfg, std::ostream& out) {
  require_path(cfg.input, "input cloud (-i)");
  prepare_output(cfg, "analyze");
  const auto cloud = read_points(cfg.input);
  const fs::path dir = cfg.output;

  std::vector<OverlapStats> sweep(cfg.probe_scales.size());
  parallel_for(sweep.size(), cfg.jobs, [&](std::size_t i) {
    sweep[i] = spatial_overlap(cloud, cfg.probe_scales[i], cfg.analysis_cell, cfg.curve_bins);
  });
  {
    std::ofstream csv(dir / "overlap.csv", std::ios::binary | std::ios::trunc);
    csv << overlap_csv(sweep);
    if (!csv) throw Error("failed writing overlap.csv");
  }
  json global = json::array();
  for (const OverlapStats& s : sweep) {
    global.push_back({{"probe_scale", s.probe_scale},
                      {"cell_size", s.cell_size},
                      {"point_count", s.point_count},
                      {"overlapped_point_count", s.overlapped_point_count},
                      {"spatial_overlap_ratio", s.spatial_overlap_ratio},
                      {"cells", s.cells.size()}});
  }
  write_json(dir / "overlap.json", json{{"scales", global}});

  const auto co = class_overlap(cloud, cfg.projection, cfg.denominator);
  write_json(dir / "class_overlap.json", class_overlap_json(co, cfg.projection.g_scale));
  const auto oracle = oracle_bound(cloud, cfg.projection);
  write_json(dir / "oracle.json", metrics_json(oracle.confusion, oracle.summary));

  for (const OverlapStats& s : sweep) {
    out << "spatial overlap @" << s.probe_scale << " m: " << s.spatial_overlap_ratio << "\n";
  }
  out << "class overlap @" << cfg.projection.g_scale << " m: " << co.class_overlap_ratio
      << " (" << to_string(co.denominator) << ")\n";
  out << "oracle OA " << oracle.summary.oa << ", mIoU " << oracle.summary.miou << "\n";
  return kOk;
}

int cmd_evaluate(const PipelineConfig& cfg, std::ostream& out) {
  require_path(cfg.ground_truth, "ground truth (--gt)");
  require_path(cfg.predictions, "predicted labels (--pred)");
  prepare_output(cfg, "evaluate");
  const auto gt = read_ground_truth(cfg.ground_truth);
  const auto pred = read_labels(cfg.predictions);
  ConfusionMatrix cm;
  cm.accumulate(gt, pred);
  const auto summary = summarize(cm);
  write_json(fs::path(cfg.output) / "metrics.json", metrics_json(cm, summary));
  out << "OA " << summary.oa << ", mAcc " << summary.macc << ", mIoU " << summary.miou << "\n";
  return kOk;
}

int cmd_weights(const PipelineConfig& cfg, std::ostream& out) {
  require_path(cfg.input, "labels or cloud (-i)");
  prepare_output(cfg, "weights");
  const auto hist = class_histogram(read_ground_truth(cfg.input));
  const auto w = class_weights(hist, cfg.weight_offset);
  write_json(fs::path(cfg.output) / "weights.json", weights_json(hist, w, cfg.weight_offset));
  for (int c = 0; c < kNumClasses; ++c) out << class_name(c) << " " << w[c] << "\n";
  return kOk;
}

int cmd_pipeline(PipelineConfig cfg, bool oracle, std::ostream& out) {
  require_path(cfg.input, "input cloud (-i)");
  if (oracle) cfg.segmenter.clear();
  if (!oracle && cfg.segmenter.empty()) {
    throw ConfigError("pipeline needs --oracle or --segmenter CMD");
  }
  prepare_output(cfg, "pipeline");
  const fs::path dir = cfg.output;
  const fs::path bundles = dir / "bundles";

  ProjectionResult projected = project_file(cfg.input, cfg.projection, project_options(cfg));
  if (cfg.complete) {
    parallel_for(projected.rasters.size(), cfg.jobs, [&](std::size_t i) {
      projected.rasters[i] = complete(projected.rasters[i], cfg.projection.completion_iterations,
                                      cfg.projection.kernel, cfg.label_strategy);
    });
  }
  write_projection(bundles, projected, cfg.jobs);
  const Manifest& manifest = projected.manifest;

  // Ground-truth passthrough reads the bundles' own label rasters, which follow
  // the prediction naming contract.
  fs::path pred_dir = bundles;
  if (!oracle) {
    pred_dir = dir / "predictions";
    fs::create_directories(pred_dir);
    const std::string cmd =
        cfg.segmenter + " " + shell_quote(bundles.string()) + " " + shell_quote(pred_dir.string());
    out << "running segmenter: " << cmd << "\n" << std::flush;
    const int status = std::system(cmd.c_str());
    if (status != 0) {
      throw Error("segmenter exited with status " + std::to_string(status) + ": " + cmd);
    }
  }
  const auto preds = read_predictions(pred_dir, manifest, cfg.jobs);
  const RemapResult remapped = remap_file(manifest, preds, cfg.input, cfg.jobs);
  write_remap(cfg, remapped);

  ConfusionMatrix cm;
  cm.accumulate(read_ground_truth(cfg.input), remapped.labels);
  const auto summary = summarize(cm);
  write_json(dir / "metrics.json", metrics_json(cm, summary));
  out << manifest.windows.size() << " windows, " << remapped.coverage.labeled << " of "
      << remapped.coverage.total << " points labeled\n";
  out << "OA " << summary.oa << ", mAcc " << summary.macc << ", mIoU " << summary.miou << "\n";
  return kOk;
}

// --- plot -------------------------------------------------------------------

struct Canvas {
  int w;
  int h;
  PngImage img;

  Canvas(int width, int height)
      : w(width), h(height), img{width, height, 3, 8, std::vector<std::uint16_t>(width * height * 3, 255)} {}

  void set(int x, int y, std::array<std::uint8_t, 3> c) {
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    for (int k = 0; k < 3; ++k) img.samples[(static_cast<std::size_t>(y) * w + x) * 3 + k] = c[k];
  }
  void line(int x0, int y0, int x1, int y1, std::array<std::uint8_t, 3> c) {
    const int dx = std::abs(x1 - x0);
    const int dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1;
    const int sy = y0 < y1 ? 1 : -1;
    int e = dx + dy;
    for (;;) {
      set(x0, y0, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * e;
      if (e2 >= dy) { e += dy; x0 += sx; }
      if (e2 <= dx) { e += dx; y0 += sy; }
    }
  }
};

int cmd_plot(const PipelineConfig& cfg, std::ostream& out) {
  require_path(cfg.input, "analysis directory or overlap.csv (-i)");
  fs::path csv_path = cfg.input;
  if (fs::is_directory(csv_path)) csv_path /= "overlap.csv";
  std::ifstream in(csv_path);
  if (!in) throw Error("cannot open '" + csv_path.string() + "'");
  prepare_output(cfg, "plot");

  std::map<double, std::vector<std::pair<double, double>>> series;
  std::string line;
  std::getline(in, line);  // header
  double y_max = 0.0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    double v[3];
    std::istringstream row(line);
    for (double& x : v) {
      std::string cell;
      std::getline(row, cell, ',');
      try {
        x = std::stod(cell);
      } catch (const std::exception&) {
        throw Error("malformed row in '" + csv_path.string() + "': " + line);
      }
    }
    series[v[0]].emplace_back(v[1], v[2]);
    y_max = std::max(y_max, v[2]);
  }
  if (y_max <= 0.0) y_max = 1.0;

  constexpr int kW = 640, kH = 400, kM = 40;
  Canvas canvas(kW, kH);
  const std::array<std::uint8_t, 3> black{0, 0, 0};
  canvas.line(kM, kH - kM, kW - kM, kH - kM, black);
  canvas.line(kM, kM, kM, kH - kM, black);
  const std::array<std::array<std::uint8_t, 3>, 6> palette{
      {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}, {140, 86, 75}}};
  std::size_t k = 0;
  for (const auto& [scale, pts] : series) {
    const auto color = palette[k++ % palette.size()];
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const auto px = [&](double p) { return kM + static_cast<int>(p / 100.0 * (kW - 2 * kM)); };
      const auto py = [&](double r) { return kH - kM - static_cast<int>(r / y_max * (kH - 2 * kM)); };
      canvas.line(px(pts[i - 1].first), py(pts[i - 1].second), px(pts[i].first),
                  py(pts[i].second), color);
    }
  }
  const fs::path png = fs::path(cfg.output) / "overlap.png";
  write_png(png, canvas.img);
  out << "wrote " << png.string() << " (" << series.size() << " scales, y max " << y_max << ")\n";
  return kOk;
}

}  // namespace

json metrics_json(const ConfusionMatrix& cm, const MetricsSummary& s) {
  json iou = json::object();
  json recall = json::object();
  for (int c = 0; c < kNumClasses; ++c) {
    const std::string name(class_name(c));
    iou[name] = s.iou[c] ? json(*s.iou[c]) : json(nullptr);
    recall[name] = s.recall[c] ? json(*s.recall[c]) : json(nullptr);
  }
  json matrix = json::array();
  for (int g = 0; g < kNumClasses; ++g) {
    json row = json::array();
    for (int p = 0; p < kNumClasses; ++p) row.push_back(cm.at(g, p));
    matrix.push_back(row);
  }
  return json{{"oa", s.oa},
              {"macc", s.macc},
              {"miou", s.miou},
              {"iou", iou},
              {"recall", recall},
              {"evaluated", s.evaluated},
              {"excluded_unlabeled_gt", s.excluded_unlabeled_gt},
              {"excluded_no_prediction", s.excluded_no_prediction},
              {"confusion", matrix}};
}

json coverage_json(const CoverageReport& c) {
  return json{{"total", c.total},
              {"labeled", c.labeled},
              {"labeled_nodata", c.labeled_nodata},
              {"outside", c.outside}};
}

json class_overlap_json(const ClassOverlapStats& s, double g_scale) {
  json pairs = json::array();
  for (int w = 0; w < kNumClasses; ++w) {
    for (int l = 0; l < kNumClasses; ++l) {
      if (s.pairs[w][l] == 0) continue;
      pairs.push_back({{"winner", class_name(w)}, {"loser", class_name(l)}, {"count", s.pairs[w][l]}});
    }
  }
  return json{{"g_scale", g_scale},
              {"denominator", to_string(s.denominator)},
              {"point_count", s.point_count},
              {"uncovered", s.uncovered},
              {"evaluated", s.evaluated},
              {"overlapped", s.overlapped},
              {"disagreeing", s.disagreeing},
              {"spatial_overlap_ratio", s.spatial_overlap_ratio},
              {"class_overlap_ratio", s.class_overlap_ratio},
              {"pairs", pairs}};
}

json weights_json(const std::array<std::uint64_t, kNumClasses>& histogram,
                  const std::array<double, kNumClasses>& weights, double offset) {
  json classes = json::array();
  for (int c = 0; c < kNumClasses; ++c) {
    classes.push_back({{"id", c}, {"name", class_name(c)}, {"count", histogram[c]},
                       {"weight", weights[c]}});
  }
  return json{{"offset", offset}, {"classes", classes}};
}

json run_json(const std::string& command, const PipelineConfig& cfg) {
  json config = json::object();
  std::istringstream lines(serialize(cfg));
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find(" = ");
    const std::string key = line.substr(0, eq);
    if (key == "jobs") continue;
    config[key] = line.substr(eq + 3);
  }
  return json{{"tool", "bevgrid"}, {"version", kVersion}, {"command", command}, {"config", config}};
}

std::vector<ClassId> read_ground_truth(const fs::path& path) {
  char magic[4] = {};
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    in.read(magic, 4);
  }
  if (std::string_view(magic, 4) != "BEVP") return read_labels(path);
  std::vector<ClassId> labels;
  for_each_batch(path, 1 << 16, [&](std::span<const Point> batch) {
    for (const Point& p : batch) labels.push_back(p.label);
  });
  return labels;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"BEV point-cloud toolkit", "bevgrid"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  std::deque<Command> commands;
  const auto add = [&](const std::string& name, const std::string& desc) -> Command& {
    Command& c = commands.emplace_back();
    c.app = app.add_subcommand(name, desc);
    c.app->add_option("--config", c.config_path, "key = value config file");
    c.option("-j,--jobs", "jobs", "worker threads (default: $BEVGRID_JOBS or 1)");
    c.option("-o,--output", "output", "output directory");
    return c;
  };

  Command& synth = add("synth", "generate a synthetic labeled cloud");
  synth.option("--scene", "scene", "flat | mosaic | roof | city");
  synth.option("--width", "scene_width", "extent along x, meters");
  synth.option("--height", "scene_height", "extent along y, meters");
  synth.option("--density", "density", "points per square meter");
  synth.option("--seed", "seed", "rng seed");
  synth.option("--sampling", "sampling", "uniform | lattice");

  Command& project = add("project", "rasterize a cloud into window bundles");
  project.option("-i,--input", "input", "point file");
  project.projection_flags();

  Command& complete_cmd = add("complete", "fill nodata pixels of projected bundles");
  complete_cmd.option("-i,--input", "input", "bundle directory");
  complete_cmd.completion_flags();
  complete_cmd.flag("--in-place", "in_place", "true", "overwrite bundles instead of writing *_c");

  Command& remap_cmd = add("remap", "label 3D points from prediction rasters");
  remap_cmd.option("-i,--input", "input", "point file");
  remap_cmd.option("--bundles", "bundles", "directory holding manifest.json");
  remap_cmd.option("--predictions", "predictions", "directory of *_label.png predictions");

  Command& analyze = add("analyze", "projection loss statistics");
  analyze.option("-i,--input", "input", "labeled point file");
  analyze.projection_flags();
  analyze.option("--probe-scales", "probe_scales", "comma-separated meters per pixel");
  analyze.option("--cell-size", "analysis_cell", "analysis cell side, meters");
  analyze.option("--bins", "curve_bins", "rank percentile bins");
  analyze.option("--denominator", "denominator", "all | overlapped");

  Command& evaluate = add("evaluate", "score predicted labels against ground truth");
  evaluate.option("--gt", "ground_truth", "label file or labeled point file");
  evaluate.option("--pred", "predictions", "predicted label file");

  Command& weights = add("weights", "log-inverse class weights");
  weights.option("-i,--input", "input", "label file or labeled point file");
  weights.option("--offset", "weight_offset", "offset inside the logarithm");

  Command& pipeline = add("pipeline", "project, complete, segment, remap and evaluate");
  pipeline.option("-i,--input", "input", "labeled point file");
  pipeline.projection_flags();
  pipeline.completion_flags();
  pipeline.flag("--no-complete", "complete", "false", "skip completion");
  pipeline.option("--segmenter", "segmenter", "command run as CMD <bundle_dir> <prediction_dir>");
  pipeline.app->add_flag("--oracle", pipeline.oracle, "use ground-truth labels as predictions");

  Command& plot = add("plot", "render overlap.csv as a PNG chart");
  plot.option("-i,--input", "input", "analysis directory or overlap.csv");

  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    for (Command& c : commands) {
      if (!c.app->parsed()) continue;
      const PipelineConfig cfg = c.resolve();
      const std::string name = c.app->get_name();
      if (name == "synth") return cmd_synth(cfg, out);
      if (name == "project") return cmd_project(cfg, out);
      if (name == "complete") return cmd_complete(cfg, out);
      if (name == "remap") return cmd_remap(cfg, out);
      if (name == "analyze") return cmd_analyze(cfg, out);
      if (name == "evaluate") return cmd_evaluate(cfg, out);
      if (name == "weights") return cmd_weights(cfg, out);
      if (name == "pipeline") return cmd_pipeline(cfg, c.oracle, out);
      if (name == "plot") return cmd_plot(cfg, out);
    }
  } catch (const ConfigError& e) {
    err << "bevgrid: invalid configuration: " << e.what() << "\n";
    return kFailure;
  } catch (const std::exception& e) {
    err << "bevgrid: error: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace bevgrid::cli
