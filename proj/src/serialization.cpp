#include "qrefine/serialization.hpp"

#include "qrefine/error.hpp"

namespace qrefine {

using nlohmann::json;

void to_json(json& j, const Issue& issue) {
  j = json{{"tool", to_string(issue.tool)},
           {"code", issue.code},
           {"aspect", to_string(issue.aspect)},
           {"severity", to_string(issue.severity)},
           {"message", issue.message},
           {"line", issue.line},
           {"end_line", issue.end_line},
           {"column", issue.column ? json(*issue.column) : json(nullptr)}};
}

void from_json(const json& j, Issue& issue) {
  issue.tool = parse_tool(j.at("tool").get<std::string>());
  issue.code = j.at("code").get<std::string>();
  issue.aspect = parse_aspect(j.at("aspect").get<std::string>());
  issue.severity = parse_severity(j.at("severity").get<std::string>());
  issue.message = j.at("message").get<std::string>();
  issue.line = j.at("line").get<int>();
  issue.end_line = j.at("end_line").get<int>();
  if (auto it = j.find("column"); it != j.end() && !it->is_null()) {
    issue.column = it->get<int>();
  } else {
    issue.column.reset();
  }
  validate(issue);
}

void to_json(json& j, const TestFailure& failure) {
  j = json{{"test_name", failure.test_name}, {"message", failure.message}};
}

void from_json(const json& j, TestFailure& failure) {
  failure.test_name = j.at("test_name").get<std::string>();
  failure.message = j.at("message").get<std::string>();
}

json verdict_to_json(const TestVerdict& verdict, bool include_duration) {
  json j{{"status", to_string(verdict.status)}, {"failures", verdict.failures}};
  if (include_duration) j["duration_s"] = verdict.duration_s;
  return j;
}

void to_json(json& j, const TestVerdict& verdict) { j = verdict_to_json(verdict, true); }

void from_json(const json& j, TestVerdict& verdict) {
  verdict.status = parse_verdict_status(j.at("status").get<std::string>());
  verdict.failures = j.value("failures", std::vector<TestFailure>{});
  verdict.duration_s = j.value("duration_s", 0.0);
  validate(verdict);
}

void to_json(json& j, const FitnessScore& score) {
  j = json{{"tests_pass", score.tests_pass}, {"total_severity", score.total_severity}};
}

void from_json(const json& j, FitnessScore& score) {
  score.tests_pass = j.at("tests_pass").get<bool>();
  score.total_severity = j.at("total_severity").get<std::int64_t>();
  if (score.total_severity < 0) throw Error(Errc::parse_error, "negative total_severity");
}

void to_json(json& j, const Candidate& candidate) {
  j = json{{"code", candidate.code},
           {"issues", candidate.issues},
           {"verdict", verdict_to_json(candidate.verdict, false)},
           {"fitness", candidate.fitness},
           {"origin", to_string(candidate.origin)},
           {"iteration_index", candidate.iteration_index}};
}

void from_json(const json& j, Candidate& candidate) {
  candidate.code = j.at("code").get<std::string>();
  candidate.issues = j.at("issues").get<std::vector<Issue>>();
  candidate.verdict = j.at("verdict").get<TestVerdict>();
  candidate.fitness = j.at("fitness").get<FitnessScore>();
  candidate.origin = parse_origin(j.at("origin").get<std::string>());
  candidate.iteration_index = j.at("iteration_index").get<int>();
}

namespace {

constexpr std::pair<const char*, QualityAspect> kFlatCategories[] = {
    {"C", QualityAspect::readability},
    {"E", QualityAspect::functionality},
    {"W", QualityAspect::reliability},
    {"R", QualityAspect::maintainability},
};

}  // namespace

json weights_to_json(const WeightTable& weights) {
  json j = json::object();
  for (const auto& [key, w] : weights.entries()) {
    if (key.severity.level == SeverityLevel::category_flat) {
      j[std::string(1, key.severity.category)] = w;
    } else {
      j[std::string(to_string(key.aspect))][to_string(key.severity)] = w;
    }
  }
  return j;
}

WeightTable weights_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::config_error, "weight table must be an object");
  WeightTable table;
  for (const auto& [name, value] : j.items()) {
    if (value.is_object()) {
      const auto aspect = parse_aspect(name);
      for (const auto& [level, w] : value.items()) {
        table.set(aspect, parse_severity(level), w.get<int>());
      }
      continue;
    }
    bool matched = false;
    for (const auto& [letter, aspect] : kFlatCategories) {
      if (name == letter) {
        table.set(aspect, Severity::flat(letter[0]), value.get<int>());
        matched = true;
      }
    }
    if (!matched) throw Error(Errc::config_error, "unknown weight table key '" + name + "'");
  }
  return table;
}

}  // namespace qrefine
