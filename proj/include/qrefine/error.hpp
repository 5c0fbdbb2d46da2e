#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qrefine {

enum class Errc {
  invalid_argument,
  unknown_category,
  missing_weight,
  tool_not_found,
  tool_timeout,
  tool_crash,
  analysis_incomplete,
  parse_error,
  empty_issue_list,
  line_out_of_range,
  empty_reply,
  provider_error,
  replay_miss,
  timeout,
  unknown_issue_code,
  candidate_evaluation_failed,
  aborted_run,
  corpus_parse_error,
  duplicate_id,
  io_error,
  trace_parse_error,
  validation_error,
  degenerate_input,
  harness_error,
  config_error,
};

std::string_view to_string(Errc code);

// All library failures are reported as Error; code() names the failure class.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qrefine
