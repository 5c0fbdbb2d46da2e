#include "qrefine/rule_analyzer.hpp"

#include <fstream>

#include "qrefine/error.hpp"
#include "qrefine/text.hpp"

namespace qrefine {

using nlohmann::json;

RuleAnalyzer::RuleAnalyzer(std::string name, std::vector<PatternRule> rules)
    : name_(std::move(name)), rules_(std::move(rules)) {
  for (const auto& rule : rules_) {
    try {
      compiled_.emplace_back(rule.pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw Error(Errc::config_error, "rule " + rule.code + ": bad pattern: " + e.what());
    }
  }
}

RuleAnalyzer RuleAnalyzer::from_json(const json& j) {
  std::vector<PatternRule> rules;
  try {
    for (const auto& r : j.at("rules")) {
      PatternRule rule;
      rule.tool = parse_tool(r.at("tool").get<std::string>());
      rule.code = r.at("code").get<std::string>();
      if (r.contains("severity")) {
        rule.severity = parse_severity(r.at("severity").get<std::string>());
      } else if (rule.tool == Tool::pylint) {
        rule.severity = Severity::flat(scored_category(rule.code));
      } else {
        throw Error(Errc::config_error, "bandit rule " + rule.code + " needs a severity");
      }
      rule.message = r.at("message").get<std::string>();
      rule.pattern = r.at("pattern").get<std::string>();
      const auto scope = r.value("scope", std::string("line"));
      if (scope == "line") {
        rule.scope = PatternRule::Scope::line;
      } else if (scope == "first-line-mismatch") {
        rule.scope = PatternRule::Scope::first_line_mismatch;
      } else {
        throw Error(Errc::config_error, "unknown rule scope '" + scope + "'");
      }
      rules.push_back(std::move(rule));
    }
    return RuleAnalyzer(j.value("name", std::string("rules")), std::move(rules));
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, std::string("malformed rule set: ") + e.what());
  }
}

RuleAnalyzer RuleAnalyzer::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot read rule set " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(Errc::config_error, path.string() + ": " + e.what());
  }
}

std::vector<Issue> RuleAnalyzer::analyze(std::string_view code) const {
  const auto lines = split_lines(code);
  std::vector<Issue> issues;
  for (std::size_t r = 0; r < rules_.size(); ++r) {
    const auto& rule = rules_[r];
    const auto& re = compiled_[r];
    if (rule.scope == PatternRule::Scope::first_line_mismatch) {
      if (lines.empty()) continue;
      if (!std::regex_search(lines.front(), re)) {
        issues.push_back(make_issue(rule.tool, rule.code, rule.severity, rule.message, 1, 1, 0));
      }
      continue;
    }
    for (std::size_t i = 0; i < lines.size(); ++i) {
      std::smatch m;
      if (std::regex_search(lines[i], m, re)) {
        const int line = static_cast<int>(i) + 1;
        issues.push_back(make_issue(rule.tool, rule.code, rule.severity, rule.message, line, line,
                                    static_cast<int>(m.position(0))));
      }
    }
  }
  sort_issues(issues);
  return issues;
}

json RuleAnalyzer::versions() const { return json{{"rules", name_}}; }

}  // namespace qrefine
