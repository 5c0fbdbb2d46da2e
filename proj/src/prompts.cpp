#include "qrefine/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "builtin_templates.hpp"
#include "qrefine/error.hpp"
#include "qrefine/hashing.hpp"
#include "qrefine/text.hpp"

namespace qrefine {

namespace fs = std::filesystem;

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::repair: return "repair";
    case PromptKind::signature_inference: return "signature-inference";
    case PromptKind::initial_generation: return "initial-generation";
  }
  return "?";
}

PromptKind parse_prompt_kind(std::string_view text) {
  for (auto k : {PromptKind::repair, PromptKind::signature_inference, PromptKind::initial_generation}) {
    if (to_string(k) == text) return k;
  }
  throw Error(Errc::parse_error, "unknown prompt kind '" + std::string(text) + "'");
}

PromptTemplates PromptTemplates::builtin() {
  return PromptTemplates{builtin::kSystemTemplate, builtin::kRepairTemplate,
                         builtin::kSignatureTemplate, builtin::kInitialTemplate};
}

PromptTemplates PromptTemplates::load(const fs::path& dir) {
  auto templates = builtin();
  auto read = [&](const char* name, std::string& slot) {
    const auto path = dir / name;
    if (!fs::exists(path)) return;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot read template " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    slot = ss.str();
  };
  read("system.txt", templates.system);
  read("repair.txt", templates.repair);
  read("signature.txt", templates.signature);
  read("initial.txt", templates.initial);
  return templates;
}

std::string PromptTemplates::fingerprint() const {
  std::string all = system + '\0' + repair + '\0' + signature + '\0' + initial;
  return sha256_hex(all).substr(0, 16);
}

std::string issue_description(const Issue& issue) {
  std::string text = issue.message;
  std::replace(text.begin(), text.end(), '\n', ' ');
  std::replace(text.begin(), text.end(), '\r', ' ');
  return text;
}

std::string annotate(std::string_view code, std::span<const Issue> selected) {
  if (selected.empty()) return std::string(code);
  const auto segments = split_segments(code);
  const auto line_count = split_lines(code).size();

  struct Group {
    int start;
    int end;
    std::vector<std::string> descriptions;
  };
  std::vector<Group> groups;
  for (const auto& issue : selected) {
    if (issue.line < 1 || issue.end_line < issue.line ||
        static_cast<std::size_t>(issue.end_line) > line_count) {
      throw Error(Errc::line_out_of_range,
                  "issue " + issue.code + " at lines " + std::to_string(issue.line) + ".." +
                      std::to_string(issue.end_line) + " outside " + std::to_string(line_count) +
                      "-line code");
    }
    auto it = std::find_if(groups.begin(), groups.end(), [&](const Group& g) {
      return g.start == issue.line && g.end == issue.end_line;
    });
    if (it == groups.end()) {
      groups.push_back(Group{issue.line, issue.end_line, {}});
      it = std::prev(groups.end());
    }
    it->descriptions.push_back(issue_description(issue));
  }

  std::multimap<int, const Group*> opens;
  std::multimap<int, const Group*> closes;
  for (const auto& g : groups) {
    opens.emplace(g.start, &g);
    closes.emplace(g.end, &g);
  }

  std::vector<std::string> out;
  out.reserve(segments.size() + groups.size() * 3);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const int line = static_cast<int>(i) + 1;
    std::vector<const Group*> opening;
    for (auto [it, last] = opens.equal_range(line); it != last; ++it) opening.push_back(it->second);
    // Outer (longer) ranges open first and close last.
    std::stable_sort(opening.begin(), opening.end(),
                     [](const Group* a, const Group* b) { return a->end > b->end; });
    for (const auto* g : opening) {
      for (std::size_t d = 0; d + 1 < g->descriptions.size(); ++d) out.push_back(g->descriptions[d]);
      out.push_back(g->descriptions.back() + " " + std::string(kStartTag));
    }
    out.push_back(segments[i]);
    std::vector<const Group*> closing;
    for (auto [it, last] = closes.equal_range(line); it != last; ++it) closing.push_back(it->second);
    std::stable_sort(closing.begin(), closing.end(),
                     [](const Group* a, const Group* b) { return a->start > b->start; });
    for (std::size_t c = 0; c < closing.size(); ++c) out.emplace_back(kEndTag);
  }
  return join_segments(out);
}

std::string strip_annotations(std::string_view text, std::span<const std::string> descriptions) {
  std::multiset<std::string> known(descriptions.begin(), descriptions.end());
  const std::string start_suffix = " " + std::string(kStartTag);
  std::vector<std::string> out;
  for (auto& segment : split_segments(text)) {
    if (segment == kEndTag) continue;
    if (segment == kStartTag || ends_with(segment, start_suffix)) {
      if (segment != kStartTag) {
        const auto head = segment.substr(0, segment.size() - start_suffix.size());
        if (auto it = known.find(head); it != known.end()) known.erase(it);
      }
      while (!out.empty()) {
        auto it = known.find(out.back());
        if (it == known.end()) break;
        known.erase(it);
        out.pop_back();
      }
      continue;
    }
    out.push_back(std::move(segment));
  }
  return join_segments(out);
}

namespace {

std::string required_names_clause(const SignatureSpec& signature) {
  if (signature.required_names.empty()) return {};
  std::string clause = "The solution must define: ";
  for (std::size_t i = 0; i < signature.required_names.size(); ++i) {
    if (i) clause += ", ";
    clause += signature.required_names[i];
  }
  return clause + ".\n";
}

std::string without_final_newline(std::string text) {
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

}  // namespace

PromptBundle build_repair_prompt(const Candidate& candidate, std::span<const Issue> selected,
                                 const SignatureSpec& signature, const TestVerdict& last_verdict,
                                 const PromptTemplates& templates) {
  for (const auto& issue : selected) {
    if (std::find(candidate.issues.begin(), candidate.issues.end(), issue) == candidate.issues.end()) {
      throw Error(Errc::invalid_argument, "selected issue " + issue.code + " is not an issue of the candidate");
    }
  }

  std::string issue_list;
  if (!selected.empty()) {
    issue_list = "Flagged issues:\n";
    for (const auto& issue : selected) {
      issue_list += "- line " + std::to_string(issue.line);
      if (issue.end_line != issue.line) issue_list += "-" + std::to_string(issue.end_line);
      issue_list += ": " + issue_description(issue) + "\n";
    }
  }

  std::string failures;
  if (last_verdict.status == VerdictStatus::failed || last_verdict.status == VerdictStatus::timeout) {
    failures = "The current code fails its tests. Use these details to correct it:\n<test failures>\n";
    if (last_verdict.status == VerdictStatus::timeout) failures += "timeout: the test run did not finish in time\n";
    for (const auto& f : last_verdict.failures) failures += f.test_name + ": " + f.message + "\n";
    failures += "</test failures>\n";
  }

  PromptBundle bundle;
  bundle.kind = PromptKind::repair;
  bundle.system_preamble = templates.system;
  bundle.user_message = render_template(
      templates.repair, {{"issue_list", issue_list},
                         {"code", without_final_newline(annotate(candidate.code, selected))},
                         {"required_names", required_names_clause(signature)},
                         {"test_failures", failures}});
  return bundle;
}

PromptBundle build_signature_prompt(const Problem& problem, const PromptTemplates& templates) {
  PromptBundle bundle;
  bundle.kind = PromptKind::signature_inference;
  bundle.system_preamble = templates.system;
  bundle.user_message = render_template(
      templates.signature, {{"task", without_final_newline(problem.task_prompt)},
                            {"test_suite", without_final_newline(problem.test_suite.value_or(""))}});
  return bundle;
}

PromptBundle build_initial_prompt(const Problem& problem, const SignatureSpec& signature,
                                  const PromptTemplates& templates) {
  PromptBundle bundle;
  bundle.kind = PromptKind::initial_generation;
  bundle.system_preamble = templates.system;
  bundle.user_message = render_template(
      templates.initial, {{"task", without_final_newline(problem.task_prompt)},
                          {"required_names", required_names_clause(signature)}});
  return bundle;
}

namespace {

bool is_python_keyword(std::string_view word) {
  static const char* const kKeywords[] = {
      "False", "None",   "True",    "and",      "as",     "assert", "async",  "await",
      "break", "class",  "continue", "def",     "del",    "elif",   "else",   "except",
      "finally", "for",  "from",    "global",   "if",     "import", "in",     "is",
      "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
      "while", "with",   "yield"};
  return std::find(std::begin(kKeywords), std::end(kKeywords), word) != std::end(kKeywords);
}

// "pkg.func(x)" -> "func"; returns empty when no identifier can be read.
std::string identifier_from(std::string_view token) {
  token = trim(token);
  for (std::string_view prefix : {"def ", "class ", "async def "}) {
    if (starts_with(token, prefix)) token = trim(token.substr(prefix.size()));
  }
  const auto stop = token.find_first_of("(:[ ");
  token = token.substr(0, stop);
  if (const auto dot = token.rfind('.'); dot != std::string_view::npos) token = token.substr(dot + 1);
  if (!is_identifier(token) || is_python_keyword(token)) return {};
  return std::string(token);
}

}  // namespace

SignatureSpec parse_signature_reply(std::string_view reply) {
  SignatureSpec spec;
  spec.source = SignatureSpec::Source::inferred;
  auto add = [&](std::string name) {
    if (name.empty()) return;
    if (std::find(spec.required_names.begin(), spec.required_names.end(), name) ==
        spec.required_names.end()) {
      spec.required_names.push_back(std::move(name));
    }
  };
  for (const auto& raw : split_lines(reply)) {
    std::string_view line = trim(raw);
    if (line.empty() || starts_with(line, "```")) continue;
    if (line.find('`') != std::string_view::npos) {
      std::size_t pos = 0;
      while (true) {
        const auto open = line.find('`', pos);
        if (open == std::string_view::npos) break;
        const auto close = line.find('`', open + 1);
        if (close == std::string_view::npos) break;
        add(identifier_from(line.substr(open + 1, close - open - 1)));
        pos = close + 1;
      }
      continue;
    }
    // Bullets and numbering: "- name", "* name", "1. name".
    if (starts_with(line, "- ") || starts_with(line, "* ")) line = trim(line.substr(2));
    if (auto dot = line.find(". "); dot != std::string_view::npos && dot > 0 &&
                                   std::all_of(line.begin(), line.begin() + dot,
                                               [](char c) { return c >= '0' && c <= '9'; })) {
      line = trim(line.substr(dot + 2));
    }
    std::string_view candidate = line;
    for (std::string_view prefix : {"def ", "class ", "async def "}) {
      if (starts_with(candidate, prefix)) candidate = trim(candidate.substr(prefix.size()));
    }
    const auto stop = candidate.find_first_of("(:");
    candidate = trim(candidate.substr(0, stop));
    if (is_identifier(candidate) && !is_python_keyword(candidate)) add(std::string(candidate));
  }
  return spec;
}

std::vector<FencedBlock> fenced_blocks(std::string_view text) {
  std::vector<FencedBlock> blocks;
  std::optional<FencedBlock> open;
  for (const auto& line : split_lines(text)) {
    const auto stripped = trim(line);
    if (starts_with(stripped, "```")) {
      if (open) {
        blocks.push_back(std::move(*open));
        open.reset();
      } else {
        open = FencedBlock{std::string(trim(stripped.substr(3))), {}};
      }
      continue;
    }
    if (open) open->content += line + "\n";
  }
  if (open) blocks.push_back(std::move(*open));
  return blocks;
}

std::string extract_code(std::string_view reply, std::span<const std::string> descriptions) {
  const auto blocks = fenced_blocks(reply);
  std::string code;
  if (blocks.empty()) {
    code = std::string(reply);
  } else {
    auto is_python = [](const FencedBlock& b) {
      std::string info = b.info.substr(0, b.info.find(' '));
      std::transform(info.begin(), info.end(), info.begin(),
                     [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
      return info == "python" || info == "py" || info == "python3";
    };
    auto it = std::find_if(blocks.begin(), blocks.end(), is_python);
    code = (it != blocks.end() ? *it : blocks.front()).content;
  }
  code = strip_annotations(code, descriptions);
  if (trim(code).empty()) throw Error(Errc::empty_reply, "reply contains no code");
  return code;
}

}  // namespace qrefine
