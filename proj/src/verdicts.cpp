#include "qrefine/verdicts.hpp"

#include <chrono>
#include <cmath>
#include <regex>

#include "qrefine/error.hpp"
#include "qrefine/serialization.hpp"
#include "qrefine/subprocess.hpp"

namespace qrefine {

using nlohmann::json;

json to_json(const RunRequest& request) {
  json j{{"candidate_code", request.candidate_code},
         {"test_suite_code", request.test_suite_code},
         {"module_name", request.module_name},
         {"timeout_s", request.timeout_s}};
  if (request.memory_limit_bytes) j["memory_limit_bytes"] = *request.memory_limit_bytes;
  return j;
}

RunRequest run_request_from_json(const json& j) {
  try {
    RunRequest r;
    r.candidate_code = j.at("candidate_code").get<std::string>();
    r.test_suite_code = j.at("test_suite_code").get<std::string>();
    r.module_name = j.at("module_name").get<std::string>();
    r.timeout_s = j.at("timeout_s").get<double>();
    if (j.contains("memory_limit_bytes") && !j.at("memory_limit_bytes").is_null()) {
      r.memory_limit_bytes = j.at("memory_limit_bytes").get<std::int64_t>();
    }
    if (!(r.timeout_s > 0)) throw Error(Errc::parse_error, "timeout_s must be positive");
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed run request: ") + e.what());
  }
}

TestVerdict parse_run_result(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::parse_error, "runner output at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  try {
    TestVerdict v;
    v.status = parse_verdict_status(doc.at("status").get<std::string>());
    if (v.status == VerdictStatus::not_run) throw Error(Errc::parse_error, "runner reported not-run");
    v.failures = doc.at("failures").get<std::vector<TestFailure>>();
    v.duration_s = doc.at("duration_s").get<double>();
    validate(v);
    return v;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed runner output: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::parse_error) throw;
    throw Error(Errc::parse_error, e.what());
  }
}

std::string encode_run_result(const TestVerdict& verdict) { return verdict_to_json(verdict, true).dump(); }

SubprocessVerdictProvider::SubprocessVerdictProvider(std::vector<std::string> command,
                                                     std::optional<std::int64_t> memory_limit_bytes)
    : command_(std::move(command)), memory_limit_bytes_(memory_limit_bytes) {
  if (command_.empty()) throw Error(Errc::config_error, "empty runner command");
}

TestVerdict SubprocessVerdictProvider::run(const Problem& problem, const std::string& code,
                                           double timeout_s) const {
  RunRequest request{code, problem.test_suite.value_or(""), problem.module_name, timeout_s,
                     memory_limit_bytes_};
  ProcessOptions options;
  options.argv = command_;
  options.stdin_data = to_json(request).dump();
  // Outer bound on the runner process: test timeout plus 10 s.
  options.timeout = std::chrono::milliseconds(static_cast<long long>(std::ceil((timeout_s + 10.0) * 1000)));
  ProcessResult result;
  try {
    result = run_process(options);
  } catch (const Error&) {
    return TestVerdict{VerdictStatus::harness_error, {}, 0.0};
  }
  if (result.timed_out || result.exit_code != 0) {
    return TestVerdict{VerdictStatus::harness_error, {}, result.duration_s};
  }
  try {
    return parse_run_result(result.stdout_data);
  } catch (const Error&) {
    return TestVerdict{VerdictStatus::harness_error, {}, result.duration_s};
  }
}

json SubprocessVerdictProvider::describe() const {
  json j{{"kind", "runner"}, {"command", command_}};
  if (memory_limit_bytes_) j["memory_limit_bytes"] = *memory_limit_bytes_;
  return j;
}

TestVerdict ScriptedVerdictProvider::run(const Problem& problem, const std::string& code, double) const {
  std::vector<TestFailure> failures;
  for (const auto& name : problem.required_signatures) {
    const std::regex defined("(^|\\n)[ \\t]*(def[ \\t]+" + name + "[ \\t]*\\(|class[ \\t]+" + name + "\\b)");
    if (!std::regex_search(code, defined)) {
      failures.push_back({"test_" + name + "_defined", "ImportError: cannot import name '" + name + "' from '" +
                                                           problem.module_name + "'"});
    }
  }
  static const std::regex kUndefined{R"(\bundefined_name\b)"};
  if (std::regex_search(code, kUndefined)) {
    failures.push_back({"test_runs", "NameError: name 'undefined_name' is not defined"});
  }
  if (code.find("# FAIL") != std::string::npos) {
    failures.push_back({"test_behaviour", "AssertionError: expected behaviour not met"});
  }
  if (failures.empty()) return TestVerdict::passed();
  return TestVerdict::failed(std::move(failures));
}

json ScriptedVerdictProvider::describe() const { return json{{"kind", "scripted"}}; }

}  // namespace qrefine
