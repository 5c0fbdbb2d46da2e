#include "qrefine/scripted.hpp"

#include <fstream>
#include <regex>
#include <set>

#include "qrefine/error.hpp"
#include "qrefine/text.hpp"

namespace qrefine {

using nlohmann::json;

namespace {

FixRule::Action parse_action(std::string_view text) {
  if (text == "replace") return FixRule::Action::replace;
  if (text == "insert_before") return FixRule::Action::insert_before;
  if (text == "delete") return FixRule::Action::delete_lines;
  if (text == "keep") return FixRule::Action::keep;
  throw Error(Errc::config_error, "unknown fix action '" + std::string(text) + "'");
}

struct ParsedRepairPrompt {
  std::string annotated_code;
  std::vector<std::string> descriptions;
};

ParsedRepairPrompt parse_repair_prompt(const std::string& message) {
  ParsedRepairPrompt parsed;
  const auto blocks = fenced_blocks(message);
  for (const auto& block : blocks) {
    if (block.info == "python") {
      parsed.annotated_code = block.content;
      break;
    }
  }
  static const std::regex kIssueLine{R"(^- line \d+(-\d+)?: (.*)$)"};
  bool in_list = false;
  for (const auto& line : split_lines(message)) {
    if (line == "Flagged issues:") {
      in_list = true;
      continue;
    }
    if (!in_list) continue;
    std::smatch m;
    if (!std::regex_match(line, m, kIssueLine)) break;
    parsed.descriptions.push_back(m[2].str());
  }
  return parsed;
}

const FixRule& find_fix(const ScriptedBehavior& script, const std::string& description) {
  for (const auto& rule : script.fix_table) {
    if (!rule.match.empty() && description.find(rule.match) != std::string::npos) return rule;
  }
  throw Error(Errc::unknown_issue_code, "no fix-table entry for '" + description + "'");
}

void apply_fix(const FixRule& rule, std::vector<std::string>& lines, std::size_t start, std::size_t& end) {
  switch (rule.action) {
    case FixRule::Action::keep:
      return;
    case FixRule::Action::replace: {
      const std::regex re(rule.pattern);
      for (std::size_t i = start; i < end; ++i) lines[i] = std::regex_replace(lines[i], re, rule.replacement);
      return;
    }
    case FixRule::Action::insert_before:
      lines.insert(lines.begin() + static_cast<std::ptrdiff_t>(start), rule.text);
      ++end;
      return;
    case FixRule::Action::delete_lines:
      lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(start),
                  lines.begin() + static_cast<std::ptrdiff_t>(end));
      end = start;
      return;
  }
}

// Rebuilds the code from its annotated form; with apply_fixes each tagged
// range is rewritten by the fix rules of its descriptions.
std::string resolve(const ParsedRepairPrompt& prompt, const ScriptedBehavior& script, bool apply_fixes) {
  struct Open {
    std::size_t start;
    std::vector<std::string> descriptions;
  };
  std::multiset<std::string> known(prompt.descriptions.begin(), prompt.descriptions.end());
  const std::string start_suffix = " " + std::string(kStartTag);
  std::vector<std::string> out;
  std::vector<Open> stack;
  for (const auto& line : split_lines(prompt.annotated_code)) {
    if (line == kEndTag) {
      if (stack.empty()) continue;
      Open group = std::move(stack.back());
      stack.pop_back();
      if (!apply_fixes) continue;
      std::size_t end = out.size();
      for (const auto& d : group.descriptions) apply_fix(find_fix(script, d), out, group.start, end);
      continue;
    }
    if (line == kStartTag || ends_with(line, start_suffix)) {
      Open group;
      if (line != kStartTag) {
        group.descriptions.push_back(line.substr(0, line.size() - start_suffix.size()));
        if (auto it = known.find(group.descriptions.back()); it != known.end()) known.erase(it);
      }
      while (!out.empty()) {
        auto it = known.find(out.back());
        if (it == known.end()) break;
        group.descriptions.insert(group.descriptions.begin(), out.back());
        known.erase(it);
        out.pop_back();
      }
      group.start = out.size();
      stack.push_back(std::move(group));
      continue;
    }
    out.push_back(line);
  }
  std::string code;
  for (const auto& l : out) code += l + "\n";
  return code;
}

std::string fenced(const std::string& code) { return "```python\n" + code + "```\n"; }

std::string signature_reply(const std::string& message) {
  static const std::regex kFromImport{R"(^\s*from\s+[\w.]+\s+import\s+\(?([\w\s,]+)\)?\s*$)"};
  std::vector<std::string> names;
  for (const auto& line : split_lines(message)) {
    std::smatch m;
    if (!std::regex_match(line, m, kFromImport)) continue;
    std::string list = m[1].str();
    std::size_t pos = 0;
    while (pos <= list.size()) {
      auto comma = list.find(',', pos);
      auto name = std::string(trim(std::string_view(list).substr(pos, comma - pos)));
      if (auto as = name.find(' '); as != std::string::npos) name = name.substr(0, as);
      if (is_identifier(name) && std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(name);
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  std::string reply;
  for (const auto& n : names) reply += n + "\n";
  return reply;
}

std::string initial_reply(const std::string& message) {
  static const std::regex kNames{R"(The solution must define: (.*)\.)"};
  std::string code = "\"\"\"Generated module.\"\"\"\n";
  std::smatch m;
  if (std::regex_search(message, m, kNames)) {
    std::string list = m[1].str();
    std::size_t pos = 0;
    while (true) {
      auto comma = list.find(',', pos);
      auto name = std::string(trim(std::string_view(list).substr(pos, comma - pos)));
      if (is_identifier(name)) code += "\n\ndef " + name + "():\n    \"\"\"Placeholder.\"\"\"\n";
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
  }
  return fenced(code);
}

}  // namespace

ScriptedBehavior ScriptedBehavior::from_json(Kind kind, const json& j) {
  ScriptedBehavior behavior;
  behavior.kind = kind;
  try {
    for (const auto& r : j.value("fix_table", json::array())) {
      FixRule rule;
      rule.code = r.at("code").get<std::string>();
      rule.match = r.at("match").get<std::string>();
      rule.action = parse_action(r.at("action").get<std::string>());
      rule.pattern = r.value("pattern", "");
      rule.replacement = r.value("replacement", "");
      rule.text = r.value("text", "");
      if (rule.action == FixRule::Action::replace) {
        try {
          std::regex probe(rule.pattern);
        } catch (const std::regex_error& e) {
          throw Error(Errc::config_error, "fix for " + rule.code + ": bad pattern: " + e.what());
        }
      }
      behavior.fix_table.push_back(std::move(rule));
    }
    behavior.inject_lines = j.value("inject_lines", std::vector<std::string>{});
    behavior.canned_replies = j.value("canned_replies", std::vector<std::string>{});
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, std::string("malformed script configuration: ") + e.what());
  }
  return behavior;
}

ScriptedBehavior ScriptedBehavior::parse(std::string_view spec, const std::filesystem::path& config_file) {
  json config = json::object();
  if (!config_file.empty()) {
    std::ifstream in(config_file);
    if (!in) throw Error(Errc::io_error, "cannot read script configuration " + config_file.string());
    try {
      config = json::parse(in);
    } catch (const json::parse_error& e) {
      throw Error(Errc::config_error, config_file.string() + ": " + e.what());
    }
  }
  const auto colon = spec.find(':');
  const auto name = spec.substr(0, colon);
  if (name == "echo") return from_json(Kind::echo, config);
  if (name == "resolve-tagged") return from_json(Kind::resolve_tagged, config);
  if (name == "canned") {
    auto behavior = from_json(Kind::canned, config);
    if (behavior.canned_replies.empty()) throw Error(Errc::config_error, "canned script needs canned_replies");
    return behavior;
  }
  if (name == "inject") {
    auto behavior = from_json(Kind::inject, config);
    if (colon != std::string_view::npos) {
      auto codes = spec.substr(colon + 1);
      while (!codes.empty()) {
        const auto comma = codes.find(',');
        behavior.inject_lines.push_back(defect_line(codes.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        codes.remove_prefix(comma + 1);
      }
    }
    if (behavior.inject_lines.empty()) throw Error(Errc::config_error, "inject script needs an issue code");
    return behavior;
  }
  throw Error(Errc::config_error, "unknown script '" + std::string(spec) + "'");
}

std::string defect_line(std::string_view code) {
  if (code == "C0303") return "INJECTED_FLAG = True  ";
  if (code == "C0301") return "INJECTED_TEXT = \"" + std::string(120, 'x') + "\"";
  if (code == "B307") return "INJECTED_VALUE = eval(\"1 + 1\")";
  if (code == "B311") return "INJECTED_TOKEN = random.random()";
  if (code == "W1514") return "INJECTED_HANDLE = open(\"data.txt\")";
  throw Error(Errc::unknown_issue_code, "no defect line for '" + std::string(code) + "'");
}

std::string scripted_reply(const PromptBundle& bundle, const ScriptedBehavior& script, std::size_t call_index) {
  if (script.kind == ScriptedBehavior::Kind::canned) {
    if (script.canned_replies.empty()) throw Error(Errc::config_error, "no canned replies");
    return script.canned_replies[std::min(call_index, script.canned_replies.size() - 1)];
  }
  switch (bundle.kind) {
    case PromptKind::signature_inference:
      return signature_reply(bundle.user_message);
    case PromptKind::initial_generation:
      return initial_reply(bundle.user_message);
    case PromptKind::repair:
      break;
  }
  const auto prompt = parse_repair_prompt(bundle.user_message);
  const bool fix = script.kind != ScriptedBehavior::Kind::echo;
  std::string code = resolve(prompt, script, fix);
  if (script.kind == ScriptedBehavior::Kind::inject) {
    for (const auto& line : script.inject_lines) code += line + "\n";
  }
  return fenced(code);
}

ScriptedProvider::ScriptedProvider(ScriptedBehavior script) : script_(std::move(script)) {}

Completion ScriptedProvider::generate(const PromptBundle& bundle) {
  return Completion{scripted_reply(bundle, script_, calls_.fetch_add(1)), std::nullopt, std::nullopt};
}

}  // namespace qrefine
