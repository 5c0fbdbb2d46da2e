#pragma once

// Unified issue model, severity weighting and the test-gated fitness order.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qrefine {

enum class Tool { bandit, pylint };

enum class QualityAspect { security, readability, functionality, maintainability, reliability };

inline constexpr std::array<QualityAspect, 5> kAllAspects = {
    QualityAspect::security, QualityAspect::readability, QualityAspect::functionality,
    QualityAspect::maintainability, QualityAspect::reliability};

enum class SeverityLevel { undefined, low, medium, high, category_flat };

// Bandit findings carry a graded level; pylint findings carry the flat
// weight of their message category (one of C, E, W, R).
struct Severity {
  SeverityLevel level = SeverityLevel::undefined;
  char category = 0;

  static constexpr Severity undefined() { return {SeverityLevel::undefined, 0}; }
  static constexpr Severity low() { return {SeverityLevel::low, 0}; }
  static constexpr Severity medium() { return {SeverityLevel::medium, 0}; }
  static constexpr Severity high() { return {SeverityLevel::high, 0}; }
  static Severity flat(char category);

  friend auto operator<=>(const Severity&, const Severity&) = default;
};

struct Issue {
  Tool tool = Tool::pylint;
  std::string code;
  QualityAspect aspect = QualityAspect::readability;
  Severity severity;
  std::string message;
  int line = 1;
  int end_line = 1;
  std::optional<int> column;

  friend bool operator==(const Issue&, const Issue&) = default;
};

// Builds an issue with aspect derived from (tool, code); validates line bounds.
Issue make_issue(Tool tool, std::string code, Severity severity, std::string message, int line,
                 int end_line, std::optional<int> column = std::nullopt);

// Throws Errc::validation_error when the aspect/severity/line invariants fail.
void validate(const Issue& issue);

QualityAspect categorize(Tool tool, std::string_view code);

// Pylint category letter for a code, with F folded into E.
char scored_category(std::string_view pylint_code);

class WeightTable {
 public:
  struct Key {
    QualityAspect aspect;
    Severity severity;
    friend auto operator<=>(const Key&, const Key&) = default;
  };

  WeightTable() = default;

  static WeightTable defaults();

  void set(QualityAspect aspect, Severity severity, int weight);
  std::optional<int> find(QualityAspect aspect, Severity severity) const;
  const std::map<Key, int>& entries() const { return entries_; }

  friend bool operator==(const WeightTable&, const WeightTable&) = default;

 private:
  std::map<Key, int> entries_;
};

int weight(const Issue& issue, const WeightTable& weights);

std::int64_t total_severity(std::span<const Issue> issues, const WeightTable& weights);

enum class VerdictStatus { passed, failed, timeout, harness_error, not_run };

struct TestFailure {
  std::string test_name;
  std::string message;
  friend bool operator==(const TestFailure&, const TestFailure&) = default;
};

struct TestVerdict {
  VerdictStatus status = VerdictStatus::not_run;
  std::vector<TestFailure> failures;
  double duration_s = 0.0;

  static TestVerdict passed(double duration_s = 0.0);
  static TestVerdict failed(std::vector<TestFailure> failures, double duration_s = 0.0);

  friend bool operator==(const TestVerdict&, const TestVerdict&) = default;
};

void validate(const TestVerdict& verdict);

// f(S) = -delta(S) when tests pass, -inf otherwise; realized as the
// lexicographic order on (tests_pass, -total_severity).
struct FitnessScore {
  bool tests_pass = false;
  std::int64_t total_severity = 0;

  bool perfect() const { return tests_pass && total_severity == 0; }

  friend bool operator==(const FitnessScore&, const FitnessScore&) = default;
  friend std::strong_ordering operator<=>(const FitnessScore& a, const FitnessScore& b) {
    if (a.tests_pass != b.tests_pass) {
      return a.tests_pass ? std::strong_ordering::greater : std::strong_ordering::less;
    }
    return b.total_severity <=> a.total_severity;
  }
};

// not_run (problems without a test suite) scores as not passing.
FitnessScore fitness(std::span<const Issue> issues, const TestVerdict& verdict,
                     const WeightTable& weights);

bool accepts(const FitnessScore& propose, const FitnessScore& current);

enum class Origin { initial, mutation };

struct Candidate {
  std::string code;
  std::vector<Issue> issues;
  TestVerdict verdict;
  FitnessScore fitness;
  Origin origin = Origin::initial;
  int iteration_index = 0;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

Candidate make_candidate(std::string code, std::vector<Issue> issues, TestVerdict verdict,
                         const WeightTable& weights, Origin origin, int iteration_index);

std::string_view to_string(Tool tool);
std::string_view to_string(QualityAspect aspect);
std::string_view to_string(VerdictStatus status);
std::string_view to_string(Origin origin);
std::string to_string(const Severity& severity);

Tool parse_tool(std::string_view text);
QualityAspect parse_aspect(std::string_view text);
VerdictStatus parse_verdict_status(std::string_view text);
Origin parse_origin(std::string_view text);
Severity parse_severity(std::string_view text);

}  // namespace qrefine
