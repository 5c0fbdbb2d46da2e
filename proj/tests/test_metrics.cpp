#include <doctest.h>

#include <cmath>

#include "qrefine/engine.hpp"
#include "qrefine/metrics.hpp"
#include "test_helpers.hpp"

using namespace qrefine;

namespace {

const WeightTable kWeights = WeightTable::defaults();

IterationTrace step(int index, std::vector<Issue> selected, std::vector<Issue> proposal, TestVerdict verdict,
                    const FitnessScore& current) {
  IterationTrace t;
  t.iteration_index = index;
  t.selected = std::move(selected);
  t.proposal_fitness = fitness(proposal, verdict, kWeights);
  t.proposal_issues = std::move(proposal);
  t.proposal_verdict = std::move(verdict);
  t.accepted = accepts(t.proposal_fitness, current);
  t.current_fitness_after = t.accepted ? t.proposal_fitness : current;
  return t;
}

IterationTrace failed_step(int index, std::vector<Issue> selected, const FitnessScore& current) {
  IterationTrace t;
  t.iteration_index = index;
  t.selected = std::move(selected);
  t.error = "empty-reply: reply contains no code";
  t.current_fitness_after = current;
  return t;
}

// Tested run: security finding fixed at the cost of a trailing-whitespace
// issue, then the docstring fixed, then a failed iteration.
RunRecord tested_run() {
  const auto b602 = testing::bandit_issue("B602", Severity::high(), 4, "subprocess call with shell=True");
  const auto c0114 = testing::pylint_issue("C0114", 1, "Missing module docstring");
  const auto c0303 = testing::pylint_issue("C0303", 4, "Trailing whitespace");
  RunRecord r;
  r.problem_id = "a";
  r.tested = true;
  r.initial = make_candidate("x", {c0114, b602}, TestVerdict::passed(), kWeights, Origin::initial, 0);
  auto current = r.initial->fitness;
  r.traces.push_back(step(0, {b602}, {c0114, c0303}, TestVerdict::passed(), current));
  current = r.traces.back().current_fitness_after;
  r.traces.push_back(step(1, {c0114}, {c0303}, TestVerdict::passed(), current));
  current = r.traces.back().current_fitness_after;
  r.traces.push_back(failed_step(2, {c0303}, current));
  r.final_candidate = make_candidate("y", {c0303}, TestVerdict::passed(), kWeights, Origin::mutation, 2);
  return r;
}

// Untested run whose proposals never change anything.
RunRecord untested_run() {
  const auto w0718 = testing::pylint_issue("W0718", 7, "Catching too general exception Exception");
  RunRecord r;
  r.problem_id = "b";
  r.tested = false;
  r.initial = make_candidate("z", {w0718}, TestVerdict{}, kWeights, Origin::initial, 0);
  for (int i = 0; i < 3; ++i) r.traces.push_back(step(i, {w0718}, {w0718}, TestVerdict{}, r.initial->fitness));
  r.final_candidate = make_candidate("z", {w0718}, TestVerdict{}, kWeights, Origin::mutation, 3);
  return r;
}

std::vector<RunRecord> sample() {
  return {tested_run(), untested_run(), aborted_record("c", true, "aborted-run: harness")};
}

const IssueStat& stat(const std::vector<IssueStat>& stats, const std::string& code) {
  for (const auto& s : stats) {
    if (s.code == code) return s;
  }
  FAIL("missing code " << code);
  throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("hand-built records satisfy the loop invariants") {
  for (const auto& r : sample()) CHECK_NOTHROW(validate(r, 3));
}

TEST_CASE("aspect prevalence and counts") {
  const auto records = sample();
  const auto s = aspect_summary(records);
  REQUIRE(s.size() == 5);
  CHECK(s[0].aspect == QualityAspect::security);
  CHECK(s[0].pct_initial == 50.0);
  CHECK(s[0].pct_after == 0.0);
  CHECK(s[0].count_initial == 1);
  CHECK(s[0].count_after == 0);
  CHECK(s[1].aspect == QualityAspect::readability);
  CHECK(s[1].pct_initial == 50.0);
  CHECK(s[1].pct_after == 50.0);
  CHECK(s[2].problems_initial == 0);
  CHECK(s[3].problems_initial == 0);
  CHECK(s[4].aspect == QualityAspect::reliability);
  CHECK(s[4].pct_initial == 50.0);
  CHECK(s[4].count_after == 1);
}

TEST_CASE("correctness counts tested completed runs only") {
  const auto records = sample();
  const auto c = correctness_summary(records);
  CHECK(c.tested == 1);
  CHECK(c.initial_pct == 100.0);
  CHECK(c.after_pct == 100.0);
  CHECK(c.change == 0.0);
}

TEST_CASE("per-code resolution, introduction and change") {
  const auto records = sample();
  const auto stats = issue_stats(records, 1);
  REQUIRE(stats.size() == 4);
  CHECK(stats[0].code == "B602");
  CHECK(stat(stats, "B602").resolution_rate == 1.0);
  CHECK(stat(stats, "B602").avg_change == 0.0);
  CHECK(stat(stats, "C0114").resolution_rate == 1.0);
  CHECK(stat(stats, "C0114").avg_change == 0.0);
  CHECK_FALSE(stat(stats, "C0303").resolution_rate);
  CHECK(stat(stats, "C0303").times_introduced == 1);
  CHECK(stat(stats, "C0303").avg_change == 0.25);
  CHECK(stat(stats, "W0718").resolution_rate == 0.0);
  CHECK(stat(stats, "W0718").times_introduced == 0);

  const auto thresholded = issue_stats(records, 2);
  CHECK_FALSE(stat(thresholded, "B602").resolution_rate);
}

TEST_CASE("per-aspect introduction") {
  const auto records = sample();
  const auto c = category_introduction(records);
  REQUIRE(c.size() == 5);
  CHECK(c[1].times_introduced == 1);
  CHECK(c[1].codes_introduced == 1);
  CHECK(c[1].avg_change == 0.25);
  CHECK(c[0].times_introduced == 0);
  CHECK(c[0].avg_change == 0.0);
  CHECK(c[4].avg_change == 0.0);
  CHECK(c[2].avg_change == 0.0);
}

TEST_CASE("per-iteration curves") {
  const auto records = sample();
  const auto points = curves(records, 3);
  REQUIRE(points.size() == 4);
  CHECK(points[0].mean_total_severity == 18.0);
  CHECK(points[0].active_runs == 2);
  CHECK(points[0].probability_of_improvement == 0.5);
  CHECK(points[1].mean_total_severity == 4.5);
  CHECK(points[1].probability_of_improvement == 0.5);
  CHECK(points[2].mean_total_severity == 3.0);
  CHECK(points[2].improvements == 0);
  CHECK(points[3].mean_total_severity == 3.0);
  CHECK(points[3].active_runs == 0);
  CHECK(points[3].probability_of_improvement == 0.0);
}

TEST_CASE("correlations") {
  const auto records = sample();
  const auto initial_final = initial_final_correlation(records, {});
  CHECK(initial_final.samples == 2);
  CHECK_FALSE(initial_final.rho);

  const auto m = selection_effects(records);
  CHECK(m.samples == 5);
  REQUIRE(m.cells[0][0].rho);
  CHECK(*m.cells[0][0].rho == doctest::Approx(-1.0).epsilon(1e-12));
  REQUIRE(m.cells[1][1].rho);
  CHECK(std::abs(*m.cells[1][1].rho - (-5.0 / std::sqrt(40.0))) < 1e-12);
  CHECK_FALSE(m.cells[4][4].rho);
  CHECK_FALSE(m.cells[2][0].rho);
}

TEST_CASE("issue matching ignores digits and case") {
  CHECK(normalize_message("Line too long (120/100)") == "line too long (/)");
  const std::vector<Issue> before{testing::pylint_issue("C0301", 3, "Line too long (120/100)"),
                                  testing::pylint_issue("C0301", 9, "Line too long (130/100)"),
                                  testing::pylint_issue("W0611", 1, "Unused import os")};
  const std::vector<Issue> after{testing::pylint_issue("C0301", 10, "Line too long (101/100)"),
                                 testing::pylint_issue("W0611", 1, "Unused import sys")};
  const auto d = diff_issues(before, after);
  REQUIRE(d.introduced.size() == 1);
  CHECK(d.introduced[0].message == "Unused import sys");
  REQUIRE(d.resolved.size() == 2);
  CHECK(d.resolved[0].line == 3);
  CHECK(d.resolved[1].code == "W0611");
}
