#pragma once

// Prompt construction and reply parsing. Flagged code regions use the
// inline format:
//
//   <description> <start issue>
//   <flagged lines>
//   <end issue>
//
// Several issues on the same range stack their descriptions above one
// shared tag pair; only the last description line carries <start issue>.

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrefine/model.hpp"
#include "qrefine/problem.hpp"

namespace qrefine {

inline constexpr std::string_view kStartTag = "<start issue>";
inline constexpr std::string_view kEndTag = "<end issue>";

enum class PromptKind { repair, signature_inference, initial_generation };

std::string_view to_string(PromptKind kind);
PromptKind parse_prompt_kind(std::string_view text);

struct PromptBundle {
  std::string system_preamble;
  std::string user_message;
  PromptKind kind = PromptKind::repair;

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

struct SignatureSpec {
  enum class Source { dataset, inferred };

  std::vector<std::string> required_names;
  Source source = Source::dataset;

  friend bool operator==(const SignatureSpec&, const SignatureSpec&) = default;
};

struct PromptTemplates {
  std::string system;
  std::string repair;
  std::string signature;
  std::string initial;

  static PromptTemplates builtin();
  // Reads system.txt, repair.txt, signature.txt and initial.txt from dir;
  // files that are absent fall back to the built-in text.
  static PromptTemplates load(const std::filesystem::path& dir);

  // Short content hash identifying this template set in trace headers.
  std::string fingerprint() const;
};

// The description placed in front of a flagged range: the message on one line.
std::string issue_description(const Issue& issue);

std::string annotate(std::string_view code, std::span<const Issue> selected);

// Removes tag lines: exact `<end issue>` lines, lines ending in
// ` <start issue>` (or exactly `<start issue>`), and the stacked description
// lines directly above a start line when they match one of `descriptions`.
std::string strip_annotations(std::string_view text, std::span<const std::string> descriptions = {});

PromptBundle build_repair_prompt(const Candidate& candidate, std::span<const Issue> selected,
                                 const SignatureSpec& signature, const TestVerdict& last_verdict,
                                 const PromptTemplates& templates);
PromptBundle build_signature_prompt(const Problem& problem, const PromptTemplates& templates);
PromptBundle build_initial_prompt(const Problem& problem, const SignatureSpec& signature,
                                  const PromptTemplates& templates);

SignatureSpec parse_signature_reply(std::string_view reply);

struct FencedBlock {
  std::string info;
  std::string content;
};

// Fenced blocks in order of appearance; an unterminated final block runs to the end.
std::vector<FencedBlock> fenced_blocks(std::string_view text);

// Code from a model reply: the first python-tagged fenced block, else the
// first fenced block, else the whole reply; annotation lines removed.
// Throws Errc::empty_reply when nothing but whitespace remains.
std::string extract_code(std::string_view reply, std::span<const std::string> descriptions = {});

}  // namespace qrefine
