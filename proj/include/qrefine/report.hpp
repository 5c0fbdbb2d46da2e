#pragma once

// Report assembly and rendering (text tables, JSON document, plot series).

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrefine/metrics.hpp"
#include "qrefine/trace.hpp"

namespace qrefine {

struct ReportOptions {
  std::size_t min_occurrences = 20;
  std::size_t permutations = 10000;
  std::uint64_t seed = 0;
  std::size_t top_k = 3;
  bool parallel = true;

  friend bool operator==(const ReportOptions&, const ReportOptions&) = default;
};

struct ConfigurationAnalytics {
  std::string label;
  std::string source;
  int max_iterations = 0;
  std::size_t problems = 0;
  std::size_t scored = 0;
  std::size_t aborted = 0;
  std::vector<AspectSummary> aspects;
  CorrectnessSummary correctness;
  std::vector<IssueStat> issues;
  std::vector<CategoryIntroduction> categories;
  std::vector<CurvePoint> curve;
  CorrelationCell initial_final;
  SelectionEffectMatrix selection_effects;

  friend bool operator==(const ConfigurationAnalytics&, const ConfigurationAnalytics&) = default;
};

struct Report {
  ReportOptions options;
  std::vector<ConfigurationAnalytics> configurations;

  friend bool operator==(const Report&, const Report&) = default;
};

ConfigurationAnalytics analyze_trace(const TraceFile& trace, const std::string& source, const ReportOptions& options);

nlohmann::json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

// Column headings used for the aspect prevalence table, e.g. "Insecure".
std::string_view aspect_heading(QualityAspect aspect);

std::string render_text(const Report& report);

enum class ReportFormat { text, structured, plot_data };
ReportFormat parse_report_format(std::string_view text);

// text -> report.txt, structured -> report.json, plot-data -> *.csv series.
// Returns the files written.
std::vector<std::filesystem::path> write_report(const Report& report, ReportFormat format,
                                                const std::filesystem::path& out_dir);

}  // namespace qrefine
