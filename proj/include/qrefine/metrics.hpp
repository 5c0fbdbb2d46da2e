#pragma once

// Analytics over run records: aspect prevalence, correctness, per-code
// resolution and introduction, per-iteration curves and rank correlations.
// Only completed runs are scored; aborted runs are counted separately.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrefine/model.hpp"
#include "qrefine/record.hpp"

namespace qrefine {

struct AspectSummary {
  QualityAspect aspect = QualityAspect::security;
  double pct_initial = 0.0;
  double pct_after = 0.0;
  std::size_t problems_initial = 0;
  std::size_t problems_after = 0;
  std::size_t count_initial = 0;
  std::size_t count_after = 0;

  friend bool operator==(const AspectSummary&, const AspectSummary&) = default;
};

std::vector<AspectSummary> aspect_summary(std::span<const RunRecord> records);

struct CorrectnessSummary {
  std::size_t tested = 0;
  std::size_t passing_initial = 0;
  std::size_t passing_after = 0;
  double initial_pct = 0.0;
  double after_pct = 0.0;
  double change = 0.0;

  friend bool operator==(const CorrectnessSummary&, const CorrectnessSummary&) = default;
};

CorrectnessSummary correctness_summary(std::span<const RunRecord> records);

struct IssueStat {
  std::string code;
  QualityAspect aspect = QualityAspect::security;
  std::size_t initial_count = 0;
  std::size_t after_count = 0;
  // 1 - after/initial clamped to [0, 1]; absent below the occurrence threshold.
  std::optional<double> resolution_rate;
  // Accepted iterations that brought at least one new occurrence of the code.
  std::size_t times_introduced = 0;
  // Mean per-iteration change of the code's count over iterations in which
  // no issue of its aspect was selected; absent when there are none.
  std::optional<double> avg_change;

  friend bool operator==(const IssueStat&, const IssueStat&) = default;
};

struct IssueDiff {
  std::vector<Issue> introduced;
  std::vector<Issue> resolved;
};

// Lower-cased message with digits removed; the matching key alongside the code.
std::string normalize_message(std::string_view message);
// Pairs issues with equal (code, normalized message), nearest line first;
// the unpaired ones are introduced (in after) or resolved (in before).
IssueDiff diff_issues(std::span<const Issue> before, std::span<const Issue> after);

// Sorted by code.
std::vector<IssueStat> issue_stats(std::span<const RunRecord> records, std::size_t min_occurrences = 20);

struct CategoryIntroduction {
  QualityAspect aspect = QualityAspect::security;
  std::size_t times_introduced = 0;
  std::size_t codes_introduced = 0;
  std::optional<double> avg_change;

  friend bool operator==(const CategoryIntroduction&, const CategoryIntroduction&) = default;
};

std::vector<CategoryIntroduction> category_introduction(std::span<const RunRecord> records);

struct CurvePoint {
  int iteration_index = 0;
  // Mean total severity of the current candidate entering this iteration,
  // over all scored runs (stopped runs keep their final value).
  double mean_total_severity = 0.0;
  double probability_of_improvement = 0.0;
  std::size_t active_runs = 0;
  std::size_t improvements = 0;

  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

// Points 0..max_iterations.
std::vector<CurvePoint> curves(std::span<const RunRecord> records, int max_iterations);

struct CorrelationCell {
  std::optional<double> rho;
  std::optional<double> p_value;
  std::size_t samples = 0;

  friend bool operator==(const CorrelationCell&, const CorrelationCell&) = default;
};

struct PermutationOptions {
  std::size_t permutations = 10000;
  std::uint64_t seed = 0;
  bool parallel = true;
};

// Per-problem initial vs final total issue counts.
CorrelationCell initial_final_correlation(std::span<const RunRecord> records, const PermutationOptions& options);

// cells[a][b]: rank correlation between "an issue of aspect a was selected"
// and the change in the number of aspect-b issues from the current candidate
// to the proposal, over iterations that produced a proposal. Aspects indexed
// in kAllAspects order.
struct SelectionEffectMatrix {
  std::array<std::array<CorrelationCell, 5>, 5> cells{};
  std::size_t samples = 0;

  friend bool operator==(const SelectionEffectMatrix&, const SelectionEffectMatrix&) = default;
};

SelectionEffectMatrix selection_effects(std::span<const RunRecord> records);

}  // namespace qrefine
