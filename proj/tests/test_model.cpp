#include <doctest.h>

#include <random>

#include "qrefine/error.hpp"
#include "qrefine/serialization.hpp"
#include "test_helpers.hpp"

using namespace qrefine;
using qrefine::testing::bandit_issue;
using qrefine::testing::pylint_issue;

namespace {

Errc error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::invalid_argument;
}

}  // namespace

TEST_CASE("categorize maps tools and pylint letters to aspects") {
  CHECK(categorize(Tool::bandit, "B602") == QualityAspect::security);
  CHECK(categorize(Tool::pylint, "C0114") == QualityAspect::readability);
  CHECK(categorize(Tool::pylint, "E0602") == QualityAspect::functionality);
  CHECK(categorize(Tool::pylint, "F0002") == QualityAspect::functionality);
  CHECK(categorize(Tool::pylint, "W1514") == QualityAspect::reliability);
  CHECK(categorize(Tool::pylint, "R1705") == QualityAspect::maintainability);
  CHECK(error_of([] { categorize(Tool::pylint, "I0011"); }) == Errc::unknown_category);
  CHECK(error_of([] { categorize(Tool::pylint, "X0001"); }) == Errc::unknown_category);
  CHECK(scored_category("F0002") == 'E');
}

TEST_CASE("make_issue validates line ranges and severities") {
  CHECK(error_of([] { pylint_issue("C0114", 0); }) == Errc::validation_error);
  CHECK(error_of([] { pylint_issue("C0114", 5, "m", 4); }) == Errc::validation_error);
  CHECK(error_of([] { make_issue(Tool::pylint, "C0114", Severity::high(), "m", 1, 1); }) ==
        Errc::validation_error);
  CHECK(error_of([] { make_issue(Tool::bandit, "B602", Severity::flat('C'), "m", 1, 1); }) ==
        Errc::validation_error);
  const auto issue = pylint_issue("R1705", 8, "m", 11);
  CHECK(issue.end_line == 11);
  CHECK(issue.aspect == QualityAspect::maintainability);
}

TEST_CASE("default weights") {
  const auto w = WeightTable::defaults();
  CHECK(weight(bandit_issue("B602", Severity::high(), 1), w) == 30);
  CHECK(weight(bandit_issue("B307", Severity::medium(), 1), w) == 20);
  CHECK(weight(bandit_issue("B311", Severity::low(), 1), w) == 10);
  CHECK(weight(bandit_issue("B999", Severity::undefined(), 1), w) == 10);
  for (const char* code : {"C0114", "E0602", "W1514", "R1711", "F0002"}) CHECK(weight(pylint_issue(code, 1), w) == 3);
  CHECK(error_of([&] { weight(pylint_issue("C0114", 1), WeightTable{}); }) == Errc::missing_weight);
  WeightTable bad;
  CHECK(error_of([&] { bad.set(QualityAspect::security, Severity::high(), -1); }) == Errc::invalid_argument);
}

TEST_CASE("total severity sums weights") {
  const auto w = WeightTable::defaults();
  CHECK(total_severity(std::vector<Issue>{}, w) == 0);
  const std::vector<Issue> high_cc{bandit_issue("B602", Severity::high(), 1), pylint_issue("C0114", 1),
                                   pylint_issue("C0303", 2)};
  CHECK(total_severity(high_cc, w) == 36);
  const std::vector<Issue> medium_w{bandit_issue("B307", Severity::medium(), 3), pylint_issue("W1514", 4)};
  CHECK(total_severity(medium_w, w) == 23);
}

TEST_CASE("fitness is lexicographic on tests then severity") {
  const FitnessScore pass0{true, 0};
  const FitnessScore pass3{true, 3};
  const FitnessScore fail0{false, 0};
  const FitnessScore fail30{false, 30};
  CHECK(pass3 > fail0);
  CHECK(pass0 > pass3);
  CHECK(fail0 > fail30);
  CHECK(accepts(pass3, pass3));
  CHECK(accepts(fail0, fail30));
  CHECK_FALSE(accepts(fail30, fail0));
  CHECK_FALSE(accepts(fail0, pass3));
  CHECK(pass0.perfect());
  CHECK_FALSE(fail0.perfect());

  const auto w = WeightTable::defaults();
  TestVerdict not_run;
  CHECK(fitness(std::vector<Issue>{}, not_run, w) == FitnessScore{false, 0});
  CHECK(fitness(std::vector<Issue>{}, TestVerdict{VerdictStatus::timeout, {}, 0}, w).tests_pass == false);
}

TEST_CASE("verdict invariants") {
  CHECK_NOTHROW(validate(TestVerdict::passed()));
  CHECK(error_of([] { validate(TestVerdict{VerdictStatus::failed, {}, 0}); }) == Errc::validation_error);
  CHECK(error_of([] { validate(TestVerdict{VerdictStatus::passed, {{"t", "m"}}, 0}); }) ==
        Errc::validation_error);
  CHECK(error_of([] { validate(TestVerdict{VerdictStatus::passed, {}, -1}); }) == Errc::validation_error);
}

TEST_CASE("model JSON round trip") {
  const auto w = WeightTable::defaults();
  std::vector<Issue> issues{bandit_issue("B602", Severity::high(), 7, "shell"), pylint_issue("C0114", 1)};
  issues[0].column = 11;
  const auto c = make_candidate("x = 1\n", issues, TestVerdict::failed({{"test_a", "AssertionError"}}, 0.5), w,
                                Origin::mutation, 3);
  const nlohmann::json j = c;
  CHECK(j.at("verdict").at("status") == "failed");
  CHECK(j.at("issues").at(1).at("column").is_null());
  auto without_duration = c;
  without_duration.verdict.duration_s = 0.0;
  CHECK(j.get<Candidate>() == without_duration);
  CHECK(weights_from_json(weights_to_json(w)) == w);
  CHECK(weights_to_json(w).at("security").at("HIGH") == 30);
  CHECK_FALSE(verdict_to_json(TestVerdict::passed(1.5), false).contains("duration_s"));
  CHECK(verdict_to_json(TestVerdict::passed(1.5), true).at("duration_s") == 1.5);
  CHECK(parse_severity("MEDIUM") == Severity::medium());
  CHECK(parse_severity("W") == Severity::flat('W'));
}

TEST_CASE("severity matches randomly built issue sets") {
  const auto w = WeightTable::defaults();
  std::mt19937 rng(7);
  const std::vector<std::pair<Issue, int>> pool{{bandit_issue("B602", Severity::high(), 1), 30},
                                                {bandit_issue("B307", Severity::medium(), 1), 20},
                                                {bandit_issue("B311", Severity::low(), 1), 10},
                                                {bandit_issue("B000", Severity::undefined(), 1), 10},
                                                {pylint_issue("C0114", 1), 3},
                                                {pylint_issue("E0602", 1), 3},
                                                {pylint_issue("W0718", 1), 3},
                                                {pylint_issue("R1711", 1), 3}};
  for (int round = 0; round < 200; ++round) {
    std::vector<Issue> set;
    std::int64_t expected = 0;
    const int n = static_cast<int>(rng() % 12);
    for (int k = 0; k < n; ++k) {
      const auto& [issue, wt] = pool[rng() % pool.size()];
      set.push_back(issue);
      expected += wt;
    }
    CHECK(total_severity(set, w) == expected);
  }
}
