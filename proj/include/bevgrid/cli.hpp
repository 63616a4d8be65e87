#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "bevgrid/analysis.hpp"
#include "bevgrid/config.hpp"
#include "bevgrid/metrics.hpp"
#include "bevgrid/remapping.hpp"

namespace bevgrid::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;    // bad flags
inline constexpr int kFailure = 2;  // invalid config, bad input, module error

/// Runs one subcommand. `args[0]` is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

nlohmann::json metrics_json(const ConfusionMatrix& cm, const MetricsSummary& summary);
nlohmann::json coverage_json(const CoverageReport& coverage);
nlohmann::json class_overlap_json(const ClassOverlapStats& stats, double g_scale);
nlohmann::json weights_json(const std::array<std::uint64_t, kNumClasses>& histogram,
                            const std::array<double, kNumClasses>& weights, double offset);
/// Resolved config without the parallelism degree, which never affects artifacts.
nlohmann::json run_json(const std::string& command, const PipelineConfig& cfg);

/// Ground truth from a point file (labels embedded) or a raw label file.
std::vector<ClassId> read_ground_truth(const std::filesystem::path& path);

}  // namespace bevgrid::cli
