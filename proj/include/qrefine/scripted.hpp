#pragma once

// Deterministic completion backends for tests and desk-scale runs. They read
// the prompt the same way a model would: the annotated code inside the first
// python fence and the "Flagged issues" list above it.

#include <atomic>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrefine/llm.hpp"

namespace qrefine {

struct FixRule {
  enum class Action { replace, insert_before, delete_lines, keep };

  std::string code;
  // Substring identifying the issue description the rule applies to.
  std::string match;
  Action action = Action::keep;
  // replace: ECMAScript pattern and format string applied to each tagged line.
  std::string pattern;
  std::string replacement;
  // insert_before: line inserted above the tagged range.
  std::string text;
};

struct ScriptedBehavior {
  enum class Kind { echo, resolve_tagged, inject, canned };

  Kind kind = Kind::echo;
  std::vector<FixRule> fix_table;
  // inject: lines appended after resolving the tagged ranges.
  std::vector<std::string> inject_lines;
  // canned: replies in call order; the last one repeats.
  std::vector<std::string> canned_replies;

  // {"fix_table": [...], "inject_lines": [...], "canned_replies": [...]}
  static ScriptedBehavior from_json(Kind kind, const nlohmann::json& j);
  // spec: "echo" | "resolve-tagged" | "inject:<CODE>[,<CODE>...]" | "canned";
  // config_file supplies the fix table / canned replies (may be empty).
  static ScriptedBehavior parse(std::string_view spec, const std::filesystem::path& config_file);
};

// Line that triggers the given issue code, used by inject.
std::string defect_line(std::string_view code);

std::string scripted_reply(const PromptBundle& bundle, const ScriptedBehavior& script,
                           std::size_t call_index = 0);

class ScriptedProvider final : public CompletionProvider {
 public:
  explicit ScriptedProvider(ScriptedBehavior script);
  Completion generate(const PromptBundle& bundle) override;

 private:
  ScriptedBehavior script_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace qrefine
