#pragma once

// Pattern-driven stand-in for the external analyzers. Used by the scripted
// end-to-end runs and tests that must not depend on installed tools.

#include <filesystem>
#include <regex>
#include <string>
#include <vector>

#include "qrefine/analyzers.hpp"

namespace qrefine {

struct PatternRule {
  enum class Scope { line, first_line_mismatch };

  Tool tool = Tool::pylint;
  std::string code;
  Severity severity;
  std::string message;
  std::string pattern;
  Scope scope = Scope::line;
};

class RuleAnalyzer final : public Analyzer {
 public:
  RuleAnalyzer(std::string name, std::vector<PatternRule> rules);

  // {"name": ..., "rules": [{"tool","code","severity"?,"message","pattern","scope"?}]}
  static RuleAnalyzer from_json(const nlohmann::json& j);
  static RuleAnalyzer from_file(const std::filesystem::path& path);

  std::vector<Issue> analyze(std::string_view code) const override;
  nlohmann::json versions() const override;

 private:
  std::string name_;
  std::vector<PatternRule> rules_;
  std::vector<std::regex> compiled_;
};

}  // namespace qrefine
