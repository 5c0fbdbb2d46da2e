#pragma once

// Bandit and Pylint adapters: process invocation and report parsing.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qrefine/model.hpp"

namespace qrefine {

struct ToolSettings {
  std::string executable;
  std::vector<std::string> extra_flags;
  double timeout_s = 60.0;
};

struct AnalyzerConfig {
  ToolSettings bandit{"bandit", {}, 60.0};
  ToolSettings pylint{"pylint", {}, 60.0};
  std::vector<std::string> disabled_checks;
  // Name of an environment variable holding a virtual-environment prefix;
  // when set, <prefix>/bin is placed ahead of PATH for the tools.
  std::string venv_env_var;

  void validate() const;
};

nlohmann::json to_json(const AnalyzerConfig& config);
AnalyzerConfig analyzer_config_from_json(const nlohmann::json& j);

struct RawReport {
  Tool tool = Tool::pylint;
  int exit_code = 0;
  std::string stdout_data;
  std::string stderr_data;
  double duration_s = 0.0;
};

// Command line used for a tool run: `bandit -f json -q <file>` and
// `pylint --output-format=json --score=n <file>`, extra flags before the file.
std::vector<std::string> analyzer_command(Tool tool, const std::filesystem::path& file,
                                          const AnalyzerConfig& config);

RawReport run_analyzer(Tool tool, const std::filesystem::path& file, const AnalyzerConfig& config);

std::vector<Issue> parse_bandit(const RawReport& report);
std::vector<Issue> parse_pylint(const RawReport& report);

// Orders issues by (line, tool, code, column, message).
void sort_issues(std::vector<Issue>& issues);

// True when pylint reported E0001; bandit is then not run.
bool has_syntax_error(const RawReport& pylint_report);
// Combined, sorted issue list. With a syntax error the bandit report is
// ignored; otherwise it is required and must have scanned the file.
std::vector<Issue> merge_reports(const RawReport& pylint_report, const std::optional<RawReport>& bandit_report,
                                 const AnalyzerConfig& config);
std::vector<Issue> analyze(std::string_view code, const AnalyzerConfig& config);

// Reported `<tool> --version` first lines; "unavailable" if a tool is missing.
nlohmann::json tool_versions(const AnalyzerConfig& config);

// Static-analysis backend used by the refinement loop.
class Analyzer {
 public:
  virtual ~Analyzer() = default;
  virtual std::vector<Issue> analyze(std::string_view code) const = 0;
  virtual nlohmann::json versions() const = 0;
};

class ToolAnalyzer final : public Analyzer {
 public:
  explicit ToolAnalyzer(AnalyzerConfig config);

  std::vector<Issue> analyze(std::string_view code) const override;
  nlohmann::json versions() const override;

 private:
  AnalyzerConfig config_;
  nlohmann::json versions_;
};

}  // namespace qrefine
