#pragma once

// Test verdicts for candidates. The sandbox runner is an external process
// speaking JSON over stdin/stdout:
//
//   request:  {"candidate_code", "test_suite_code", "module_name", "timeout_s", "memory_limit_bytes"?}
//   response: {"status", "failures": [{"test_name", "message"}], "duration_s"}
//
// A nonzero runner exit status is a harness error.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qrefine/model.hpp"
#include "qrefine/problem.hpp"

namespace qrefine {

struct RunRequest {
  std::string candidate_code;
  std::string test_suite_code;
  std::string module_name;
  double timeout_s = 30.0;
  std::optional<std::int64_t> memory_limit_bytes;

  friend bool operator==(const RunRequest&, const RunRequest&) = default;
};

nlohmann::json to_json(const RunRequest& request);
RunRequest run_request_from_json(const nlohmann::json& j);

// Runner output to a verdict. Throws Errc::parse_error when the document is
// malformed or violates the verdict invariants; not-run is never a valid status.
TestVerdict parse_run_result(std::string_view text);
std::string encode_run_result(const TestVerdict& verdict);

class VerdictProvider {
 public:
  virtual ~VerdictProvider() = default;
  // Only called for problems with a test suite.
  virtual TestVerdict run(const Problem& problem, const std::string& code, double timeout_s) const = 0;
  virtual nlohmann::json describe() const = 0;
};

class SubprocessVerdictProvider final : public VerdictProvider {
 public:
  explicit SubprocessVerdictProvider(std::vector<std::string> command,
                                     std::optional<std::int64_t> memory_limit_bytes = std::nullopt);

  TestVerdict run(const Problem& problem, const std::string& code, double timeout_s) const override;
  nlohmann::json describe() const override;

 private:
  std::vector<std::string> command_;
  std::optional<std::int64_t> memory_limit_bytes_;
};

// Stand-in for the runner: a candidate passes when it defines every required
// name (`def name(` or `class name`), does not reference `undefined_name`, and
// carries no `# FAIL` marker.
class ScriptedVerdictProvider final : public VerdictProvider {
 public:
  TestVerdict run(const Problem& problem, const std::string& code, double timeout_s) const override;
  nlohmann::json describe() const override;
};

}  // namespace qrefine
