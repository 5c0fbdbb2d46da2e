#include "qrefine/analyzers.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <tuple>

#include "qrefine/error.hpp"
#include "qrefine/subprocess.hpp"

namespace qrefine {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::regex kPylintCode{"[A-Z][0-9]{4}"};
const std::regex kBanditCode{"B[0-9]{3}"};

const ToolSettings& settings_for(Tool tool, const AnalyzerConfig& config) {
  return tool == Tool::bandit ? config.bandit : config.pylint;
}

std::vector<std::string> tool_environment(const AnalyzerConfig& config) {
  std::string path = std::getenv("PATH") ? std::getenv("PATH") : "/usr/local/bin:/usr/bin:/bin";
  std::vector<std::string> env;
  if (!config.venv_env_var.empty()) {
    if (const char* prefix = std::getenv(config.venv_env_var.c_str()); prefix && *prefix) {
      path = (fs::path(prefix) / "bin").string() + ":" + path;
      env.push_back(config.venv_env_var + "=" + prefix);
    }
  }
  env.push_back("PATH=" + path);
  return env;
}

json parse_report_json(const RawReport& report, std::string_view tool_name) {
  try {
    return json::parse(report.stdout_data);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, std::string(tool_name) + " report malformed at byte " +
                                       std::to_string(e.byte) + ": " + e.what());
  }
}

// Exit codes with which a tool still produced a full report.
bool completed_exit(Tool tool, int exit_code) {
  if (tool == Tool::bandit) return exit_code == 0 || exit_code == 1;
  return exit_code >= 0 && exit_code < 32;
}

Severity bandit_severity(std::string_view level) {
  if (level == "HIGH") return Severity::high();
  if (level == "MEDIUM") return Severity::medium();
  if (level == "LOW") return Severity::low();
  if (level == "UNDEFINED") return Severity::undefined();
  throw Error(Errc::parse_error, "unknown bandit severity '" + std::string(level) + "'");
}

}  // namespace

void AnalyzerConfig::validate() const {
  for (const auto* tool : {&bandit, &pylint}) {
    if (tool->timeout_s <= 0) throw Error(Errc::config_error, "analyzer timeouts must be positive");
    if (tool->executable.empty()) throw Error(Errc::config_error, "analyzer executable is empty");
  }
  for (const auto& code : disabled_checks) {
    if (!std::regex_match(code, kPylintCode) && !std::regex_match(code, kBanditCode)) {
      throw Error(Errc::config_error, "disabled check '" + code + "' is not an issue code");
    }
  }
}

json to_json(const AnalyzerConfig& config) {
  auto tool = [](const ToolSettings& t) {
    return json{{"executable", t.executable}, {"extra_flags", t.extra_flags}, {"timeout_s", t.timeout_s}};
  };
  return json{{"bandit", tool(config.bandit)},
              {"pylint", tool(config.pylint)},
              {"disabled_checks", config.disabled_checks},
              {"venv_env_var", config.venv_env_var}};
}

AnalyzerConfig analyzer_config_from_json(const json& j) {
  AnalyzerConfig config;
  auto tool = [](const json& t, ToolSettings& s) {
    s.executable = t.value("executable", s.executable);
    s.extra_flags = t.value("extra_flags", s.extra_flags);
    s.timeout_s = t.value("timeout_s", s.timeout_s);
  };
  if (j.contains("bandit")) tool(j.at("bandit"), config.bandit);
  if (j.contains("pylint")) tool(j.at("pylint"), config.pylint);
  config.disabled_checks = j.value("disabled_checks", config.disabled_checks);
  config.venv_env_var = j.value("venv_env_var", config.venv_env_var);
  config.validate();
  return config;
}

std::vector<std::string> analyzer_command(Tool tool, const fs::path& file,
                                          const AnalyzerConfig& config) {
  const auto& settings = settings_for(tool, config);
  std::vector<std::string> argv{settings.executable};
  if (tool == Tool::bandit) {
    argv.insert(argv.end(), {"-f", "json", "-q"});
  } else {
    argv.insert(argv.end(), {"--output-format=json", "--score=n"});
  }
  argv.insert(argv.end(), settings.extra_flags.begin(), settings.extra_flags.end());
  argv.push_back(file.string());
  return argv;
}

RawReport run_analyzer(Tool tool, const fs::path& file, const AnalyzerConfig& config) {
  const auto& settings = settings_for(tool, config);
  std::error_code ec;
  if (!fs::is_regular_file(file, ec)) {
    throw Error(Errc::tool_crash, std::string(to_string(tool)) + ": input file '" + file.string() +
                                      "' does not exist");
  }
  ProcessOptions options;
  options.argv = analyzer_command(tool, file, config);
  options.timeout = std::chrono::milliseconds(static_cast<long long>(settings.timeout_s * 1000));
  options.environment = tool_environment(config);
  options.working_directory = file.parent_path();

  auto result = run_process(options);
  if (result.timed_out) {
    throw Error(Errc::tool_timeout, std::string(to_string(tool)) + " exceeded " +
                                        std::to_string(settings.timeout_s) + "s");
  }
  RawReport report{tool, result.exit_code, std::move(result.stdout_data),
                   std::move(result.stderr_data), result.duration_s};
  if (!completed_exit(tool, report.exit_code)) {
    bool parseable = json::accept(report.stdout_data);
    if (!parseable) {
      throw Error(Errc::tool_crash, std::string(to_string(tool)) + " exited with " +
                                        std::to_string(report.exit_code) + ": " +
                                        report.stderr_data.substr(0, 500));
    }
  }
  return report;
}

std::vector<Issue> parse_bandit(const RawReport& report) {
  if (report.tool != Tool::bandit) throw Error(Errc::invalid_argument, "not a bandit report");
  const json doc = parse_report_json(report, "bandit");
  if (!doc.is_object() || !doc.contains("results") || !doc["results"].is_array()) {
    throw Error(Errc::parse_error, "bandit report has no results array");
  }
  std::vector<Issue> issues;
  for (const auto& r : doc["results"]) {
    try {
      const int line = r.at("line_number").get<int>();
      int end_line = line;
      if (auto it = r.find("line_range"); it != r.end() && it->is_array() && !it->empty()) {
        for (const auto& l : *it) end_line = std::max(end_line, l.get<int>());
      }
      std::optional<int> column;
      if (auto it = r.find("col_offset"); it != r.end() && it->is_number_integer()) {
        column = it->get<int>();
      }
      issues.push_back(make_issue(Tool::bandit, r.at("test_id").get<std::string>(),
                                  bandit_severity(r.at("issue_severity").get<std::string>()),
                                  r.at("issue_text").get<std::string>(), line, end_line, column));
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, std::string("bandit result malformed: ") + e.what());
    }
  }
  return issues;
}

std::vector<Issue> parse_pylint(const RawReport& report) {
  if (report.tool != Tool::pylint) throw Error(Errc::invalid_argument, "not a pylint report");
  const json doc = parse_report_json(report, "pylint");
  if (!doc.is_array()) throw Error(Errc::parse_error, "pylint report is not a message list");
  std::vector<Issue> issues;
  for (const auto& m : doc) {
    try {
      auto code = m.at("message-id").get<std::string>();
      if (code.empty()) throw Error(Errc::parse_error, "pylint message without id");
      if (code.front() == 'I') continue;
      const char category = scored_category(code);
      const int line = std::max(1, m.at("line").get<int>());
      int end_line = line;
      if (auto it = m.find("endLine"); it != m.end() && it->is_number_integer()) {
        end_line = std::max(line, it->get<int>());
      }
      std::optional<int> column;
      if (auto it = m.find("column"); it != m.end() && it->is_number_integer()) {
        column = it->get<int>();
      }
      auto message = m.at("message").get<std::string>();
      if (auto it = m.find("symbol"); it != m.end() && it->is_string()) {
        message += " (" + it->get<std::string>() + ")";
      }
      issues.push_back(make_issue(Tool::pylint, std::move(code), Severity::flat(category),
                                  std::move(message), line, end_line, column));
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, std::string("pylint message malformed: ") + e.what());
    }
  }
  return issues;
}

void sort_issues(std::vector<Issue>& issues) {
  std::stable_sort(issues.begin(), issues.end(), [](const Issue& a, const Issue& b) {
    return std::tie(a.line, a.tool, a.code, a.column, a.message) <
           std::tie(b.line, b.tool, b.code, b.column, b.message);
  });
}

std::vector<Issue> analyze(std::string_view code, const AnalyzerConfig& config) {
  TempDir dir("qrefine-analyze");
  // Fixed file name: pylint derives the module name (and some messages) from it.
  const auto file = dir.path() / "candidate.py";
  {
    std::ofstream out(file, std::ios::binary);
    out.write(code.data(), static_cast<std::streamsize>(code.size()));
    if (!out) throw Error(Errc::io_error, "cannot write " + file.string());
  }

  auto run = [&](Tool tool) {
    try {
      return run_analyzer(tool, file, config);
    } catch (const Error& e) {
      if (e.code() == Errc::tool_timeout) throw Error(Errc::analysis_incomplete, e.what());
      throw;
    }
  };
  const auto pylint_report = run(Tool::pylint);
  std::optional<RawReport> bandit_report;
  if (!has_syntax_error(pylint_report)) bandit_report = run(Tool::bandit);
  return merge_reports(pylint_report, bandit_report, config);
}

bool has_syntax_error(const RawReport& pylint_report) {
  const auto issues = parse_pylint(pylint_report);
  return std::any_of(issues.begin(), issues.end(), [](const Issue& i) { return i.code == "E0001"; });
}

std::vector<Issue> merge_reports(const RawReport& pylint_report, const std::optional<RawReport>& bandit_report,
                                 const AnalyzerConfig& config) {
  auto pylint_issues = parse_pylint(pylint_report);
  const bool syntax_error = std::any_of(pylint_issues.begin(), pylint_issues.end(),
                                        [](const Issue& i) { return i.code == "E0001"; });
  std::vector<Issue> issues;
  if (!syntax_error) {
    if (!bandit_report) throw Error(Errc::analysis_incomplete, "bandit report missing");
    const json doc = parse_report_json(*bandit_report, "bandit");
    if (doc.is_object() && doc.contains("errors") && !doc["errors"].empty()) {
      throw Error(Errc::analysis_incomplete, "bandit could not scan candidate: " + doc["errors"].dump());
    }
    issues = parse_bandit(*bandit_report);
  }
  issues.insert(issues.end(), std::make_move_iterator(pylint_issues.begin()),
                std::make_move_iterator(pylint_issues.end()));
  std::erase_if(issues, [&](const Issue& i) {
    return std::find(config.disabled_checks.begin(), config.disabled_checks.end(), i.code) !=
           config.disabled_checks.end();
  });
  sort_issues(issues);
  return issues;
}

json tool_versions(const AnalyzerConfig& config) {
  json versions = json::object();
  for (Tool tool : {Tool::bandit, Tool::pylint}) {
    std::string version = "unavailable";
    try {
      ProcessOptions options;
      options.argv = {settings_for(tool, config).executable, "--version"};
      options.timeout = std::chrono::seconds(30);
      options.environment = tool_environment(config);
      auto r = run_process(options);
      auto text = r.stdout_data.empty() ? r.stderr_data : r.stdout_data;
      version = text.substr(0, text.find('\n'));
    } catch (const Error&) {
    }
    versions[std::string(to_string(tool))] = version;
  }
  return versions;
}

ToolAnalyzer::ToolAnalyzer(AnalyzerConfig config)
    : config_(std::move(config)), versions_(tool_versions(config_)) {
  config_.validate();
}

std::vector<Issue> ToolAnalyzer::analyze(std::string_view code) const {
  return qrefine::analyze(code, config_);
}

json ToolAnalyzer::versions() const { return versions_; }

}  // namespace qrefine
