#include "qrefine/model.hpp"

#include <numeric>

#include "qrefine/error.hpp"

namespace qrefine {

Severity Severity::flat(char category) {
  switch (category) {
    case 'C':
    case 'E':
    case 'W':
    case 'R':
      return {SeverityLevel::category_flat, category};
    default:
      throw Error(Errc::unknown_category, std::string("no flat severity for category '") +
                                             category + "'");
  }
}

QualityAspect categorize(Tool tool, std::string_view code) {
  if (code.empty()) throw Error(Errc::invalid_argument, "empty issue code");
  if (tool == Tool::bandit) return QualityAspect::security;
  switch (code.front()) {
    case 'C': return QualityAspect::readability;
    case 'E': return QualityAspect::functionality;
    case 'F': return QualityAspect::functionality;
    case 'W': return QualityAspect::reliability;
    case 'R': return QualityAspect::maintainability;
    default:
      throw Error(Errc::unknown_category, "pylint code '" + std::string(code) + "' is not scored");
  }
}

char scored_category(std::string_view pylint_code) {
  if (pylint_code.empty()) throw Error(Errc::invalid_argument, "empty issue code");
  const char c = pylint_code.front();
  if (c == 'F') return 'E';
  if (c == 'C' || c == 'E' || c == 'W' || c == 'R') return c;
  throw Error(Errc::unknown_category, "pylint code '" + std::string(pylint_code) + "' is not scored");
}

void validate(const Issue& issue) {
  if (issue.code.empty()) throw Error(Errc::validation_error, "issue without code");
  if (issue.line < 1 || issue.end_line < issue.line) {
    throw Error(Errc::validation_error, "issue " + issue.code + " has invalid line range " +
                                            std::to_string(issue.line) + ".." +
                                            std::to_string(issue.end_line));
  }
  if (issue.column && *issue.column < 0) {
    throw Error(Errc::validation_error, "issue " + issue.code + " has negative column");
  }
  if (issue.tool == Tool::bandit) {
    if (issue.aspect != QualityAspect::security ||
        issue.severity.level == SeverityLevel::category_flat) {
      throw Error(Errc::validation_error, "bandit issue " + issue.code + " must be a graded security issue");
    }
    return;
  }
  if (issue.aspect != categorize(Tool::pylint, issue.code) ||
      issue.severity != Severity::flat(scored_category(issue.code))) {
    throw Error(Errc::validation_error, "pylint issue " + issue.code + " has inconsistent aspect or severity");
  }
}

Issue make_issue(Tool tool, std::string code, Severity severity, std::string message, int line,
                 int end_line, std::optional<int> column) {
  Issue issue;
  issue.tool = tool;
  issue.aspect = categorize(tool, code);
  issue.code = std::move(code);
  issue.severity = severity;
  issue.message = std::move(message);
  issue.line = line;
  issue.end_line = end_line;
  issue.column = column;
  validate(issue);
  return issue;
}

WeightTable WeightTable::defaults() {
  WeightTable table;
  table.set(QualityAspect::security, Severity::high(), 30);
  table.set(QualityAspect::security, Severity::medium(), 20);
  table.set(QualityAspect::security, Severity::low(), 10);
  table.set(QualityAspect::security, Severity::undefined(), 10);
  table.set(QualityAspect::readability, Severity::flat('C'), 3);
  table.set(QualityAspect::functionality, Severity::flat('E'), 3);
  table.set(QualityAspect::reliability, Severity::flat('W'), 3);
  table.set(QualityAspect::maintainability, Severity::flat('R'), 3);
  return table;
}

void WeightTable::set(QualityAspect aspect, Severity severity, int weight) {
  if (weight < 0) throw Error(Errc::invalid_argument, "weights must be non-negative");
  entries_[Key{aspect, severity}] = weight;
}

std::optional<int> WeightTable::find(QualityAspect aspect, Severity severity) const {
  auto it = entries_.find(Key{aspect, severity});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

int weight(const Issue& issue, const WeightTable& weights) {
  if (auto w = weights.find(issue.aspect, issue.severity)) return *w;
  throw Error(Errc::missing_weight, "no weight for " + std::string(to_string(issue.aspect)) + "/" +
                                        to_string(issue.severity) + " (issue " + issue.code + ")");
}

std::int64_t total_severity(std::span<const Issue> issues, const WeightTable& weights) {
  return std::accumulate(issues.begin(), issues.end(), std::int64_t{0},
                         [&](std::int64_t sum, const Issue& i) { return sum + weight(i, weights); });
}

TestVerdict TestVerdict::passed(double duration_s) {
  return TestVerdict{VerdictStatus::passed, {}, duration_s};
}

TestVerdict TestVerdict::failed(std::vector<TestFailure> failures, double duration_s) {
  return TestVerdict{VerdictStatus::failed, std::move(failures), duration_s};
}

void validate(const TestVerdict& verdict) {
  if (verdict.duration_s < 0) throw Error(Errc::validation_error, "negative test duration");
  if (verdict.status == VerdictStatus::passed && !verdict.failures.empty()) {
    throw Error(Errc::validation_error, "passed verdict carries failures");
  }
  if (verdict.status == VerdictStatus::failed && verdict.failures.empty()) {
    throw Error(Errc::validation_error, "failed verdict without failures");
  }
}

FitnessScore fitness(std::span<const Issue> issues, const TestVerdict& verdict,
                     const WeightTable& weights) {
  return FitnessScore{verdict.status == VerdictStatus::passed, total_severity(issues, weights)};
}

bool accepts(const FitnessScore& propose, const FitnessScore& current) {
  return propose >= current;
}

Candidate make_candidate(std::string code, std::vector<Issue> issues, TestVerdict verdict,
                         const WeightTable& weights, Origin origin, int iteration_index) {
  Candidate c;
  c.fitness = fitness(issues, verdict, weights);
  c.code = std::move(code);
  c.issues = std::move(issues);
  c.verdict = std::move(verdict);
  c.origin = origin;
  c.iteration_index = iteration_index;
  return c;
}

std::string_view to_string(Tool tool) { return tool == Tool::bandit ? "bandit" : "pylint"; }

std::string_view to_string(QualityAspect aspect) {
  switch (aspect) {
    case QualityAspect::security: return "security";
    case QualityAspect::readability: return "readability";
    case QualityAspect::functionality: return "functionality";
    case QualityAspect::maintainability: return "maintainability";
    case QualityAspect::reliability: return "reliability";
  }
  return "?";
}

std::string_view to_string(VerdictStatus status) {
  switch (status) {
    case VerdictStatus::passed: return "passed";
    case VerdictStatus::failed: return "failed";
    case VerdictStatus::timeout: return "timeout";
    case VerdictStatus::harness_error: return "harness-error";
    case VerdictStatus::not_run: return "not-run";
  }
  return "?";
}

std::string_view to_string(Origin origin) {
  return origin == Origin::initial ? "initial" : "mutation";
}

std::string to_string(const Severity& severity) {
  switch (severity.level) {
    case SeverityLevel::undefined: return "UNDEFINED";
    case SeverityLevel::low: return "LOW";
    case SeverityLevel::medium: return "MEDIUM";
    case SeverityLevel::high: return "HIGH";
    case SeverityLevel::category_flat: return std::string(1, severity.category);
  }
  return "?";
}

Tool parse_tool(std::string_view text) {
  if (text == "bandit") return Tool::bandit;
  if (text == "pylint") return Tool::pylint;
  throw Error(Errc::parse_error, "unknown tool '" + std::string(text) + "'");
}

QualityAspect parse_aspect(std::string_view text) {
  for (auto a : kAllAspects) {
    if (to_string(a) == text) return a;
  }
  throw Error(Errc::parse_error, "unknown aspect '" + std::string(text) + "'");
}

VerdictStatus parse_verdict_status(std::string_view text) {
  for (auto s : {VerdictStatus::passed, VerdictStatus::failed, VerdictStatus::timeout,
                 VerdictStatus::harness_error, VerdictStatus::not_run}) {
    if (to_string(s) == text) return s;
  }
  throw Error(Errc::parse_error, "unknown verdict status '" + std::string(text) + "'");
}

Origin parse_origin(std::string_view text) {
  if (text == "initial") return Origin::initial;
  if (text == "mutation") return Origin::mutation;
  throw Error(Errc::parse_error, "unknown origin '" + std::string(text) + "'");
}

Severity parse_severity(std::string_view text) {
  if (text == "UNDEFINED") return Severity::undefined();
  if (text == "LOW") return Severity::low();
  if (text == "MEDIUM") return Severity::medium();
  if (text == "HIGH") return Severity::high();
  if (text.size() == 1) {
    try {
      return Severity::flat(text.front());
    } catch (const Error&) {
    }
  }
  throw Error(Errc::parse_error, "unknown severity '" + std::string(text) + "'");
}

}  // namespace qrefine
