#include "qrefine/error.hpp"

namespace qrefine {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::unknown_category: return "unknown-category";
    case Errc::missing_weight: return "missing-weight";
    case Errc::tool_not_found: return "tool-not-found";
    case Errc::tool_timeout: return "tool-timeout";
    case Errc::tool_crash: return "tool-crash";
    case Errc::analysis_incomplete: return "analysis-incomplete";
    case Errc::parse_error: return "parse-error";
    case Errc::empty_issue_list: return "empty-issue-list";
    case Errc::line_out_of_range: return "line-out-of-range";
    case Errc::empty_reply: return "empty-reply";
    case Errc::provider_error: return "provider-error";
    case Errc::replay_miss: return "replay-miss";
    case Errc::timeout: return "timeout";
    case Errc::unknown_issue_code: return "unknown-issue-code";
    case Errc::candidate_evaluation_failed: return "candidate-evaluation-failed";
    case Errc::aborted_run: return "aborted-run";
    case Errc::corpus_parse_error: return "corpus-parse-error";
    case Errc::duplicate_id: return "duplicate-id";
    case Errc::io_error: return "io-error";
    case Errc::trace_parse_error: return "trace-parse-error";
    case Errc::validation_error: return "validation-error";
    case Errc::degenerate_input: return "degenerate-input";
    case Errc::harness_error: return "harness-error";
    case Errc::config_error: return "config-error";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace qrefine
