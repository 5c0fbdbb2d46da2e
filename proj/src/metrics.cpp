#include "qrefine/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>

#include "qrefine/error.hpp"
#include "qrefine/rank_kernels.hpp"

namespace qrefine {

namespace {

bool scored(const RunRecord& r) {
  return r.status == RunStatus::completed && r.initial && r.final_candidate;
}

double percent(std::size_t n, std::size_t d) { return d == 0 ? 0.0 : 100.0 * static_cast<double>(n) / static_cast<double>(d); }

std::size_t aspect_index(QualityAspect a) {
  return static_cast<std::size_t>(std::find(kAllAspects.begin(), kAllAspects.end(), a) - kAllAspects.begin());
}

using StepVisitor = std::function<void(const IterationTrace&, const std::vector<Issue>& before,
                                       const std::vector<Issue>& after)>;

// Visits every iteration with the current issues before and after it.
void walk(const RunRecord& r, const StepVisitor& visit) {
  std::vector<Issue> current = r.initial->issues;
  for (const auto& t : r.traces) {
    std::vector<Issue> next = t.accepted ? t.proposal_issues : current;
    visit(t, current, next);
    current = std::move(next);
  }
}

std::array<bool, 5> selected_aspects(const IterationTrace& t) {
  std::array<bool, 5> s{};
  for (const auto& issue : t.selected) s[aspect_index(issue.aspect)] = true;
  return s;
}

std::map<std::string, long> code_counts(const std::vector<Issue>& issues) {
  std::map<std::string, long> counts;
  for (const auto& i : issues) ++counts[i.code];
  return counts;
}

std::array<long, 5> aspect_counts(const std::vector<Issue>& issues) {
  std::array<long, 5> counts{};
  for (const auto& i : issues) ++counts[aspect_index(i.aspect)];
  return counts;
}

std::optional<double> mean(double sum, std::size_t n) {
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::vector<AspectSummary> aspect_summary(std::span<const RunRecord> records) {
  std::vector<AspectSummary> out;
  std::size_t denominator = 0;
  for (const auto& r : records) denominator += scored(r) ? 1 : 0;
  for (auto aspect : kAllAspects) {
    AspectSummary s;
    s.aspect = aspect;
    for (const auto& r : records) {
      if (!scored(r)) continue;
      const auto before = aspect_counts(r.initial->issues)[aspect_index(aspect)];
      const auto after = aspect_counts(r.final_candidate->issues)[aspect_index(aspect)];
      s.count_initial += static_cast<std::size_t>(before);
      s.count_after += static_cast<std::size_t>(after);
      s.problems_initial += before > 0 ? 1 : 0;
      s.problems_after += after > 0 ? 1 : 0;
    }
    s.pct_initial = percent(s.problems_initial, denominator);
    s.pct_after = percent(s.problems_after, denominator);
    out.push_back(s);
  }
  return out;
}

CorrectnessSummary correctness_summary(std::span<const RunRecord> records) {
  CorrectnessSummary s;
  for (const auto& r : records) {
    if (!scored(r) || !r.tested) continue;
    ++s.tested;
    s.passing_initial += r.initial->fitness.tests_pass ? 1 : 0;
    s.passing_after += r.final_candidate->fitness.tests_pass ? 1 : 0;
  }
  s.initial_pct = percent(s.passing_initial, s.tested);
  s.after_pct = percent(s.passing_after, s.tested);
  s.change = s.after_pct - s.initial_pct;
  return s;
}

std::string normalize_message(std::string_view message) {
  std::string out;
  for (char c : message) {
    if (std::isdigit(static_cast<unsigned char>(c))) continue;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

IssueDiff diff_issues(std::span<const Issue> before, std::span<const Issue> after) {
  std::vector<bool> used(before.size(), false);
  IssueDiff diff;
  std::vector<std::string> before_keys;
  for (const auto& b : before) before_keys.push_back(b.code + '\n' + normalize_message(b.message));
  for (const auto& a : after) {
    const auto key = a.code + '\n' + normalize_message(a.message);
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < before.size(); ++i) {
      if (used[i] || before_keys[i] != key) continue;
      if (!best || std::abs(before[i].line - a.line) < std::abs(before[*best].line - a.line)) best = i;
    }
    if (best) {
      used[*best] = true;
    } else {
      diff.introduced.push_back(a);
    }
  }
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (!used[i]) diff.resolved.push_back(before[i]);
  }
  return diff;
}

std::vector<IssueStat> issue_stats(std::span<const RunRecord> records, std::size_t min_occurrences) {
  std::map<std::string, IssueStat> stats;
  auto stat_for = [&](const Issue& issue) -> IssueStat& {
    auto [it, inserted] = stats.try_emplace(issue.code);
    if (inserted) {
      it->second.code = issue.code;
      it->second.aspect = issue.aspect;
    }
    return it->second;
  };
  for (const auto& r : records) {
    if (!scored(r)) continue;
    for (const auto& i : r.initial->issues) ++stat_for(i).initial_count;
    for (const auto& i : r.final_candidate->issues) ++stat_for(i).after_count;
    walk(r, [&](const IterationTrace& t, const std::vector<Issue>& before, const std::vector<Issue>&) {
      if (!t.accepted) return;
      std::set<std::string> codes;
      for (const auto& i : diff_issues(before, t.proposal_issues).introduced) {
        stat_for(i);
        codes.insert(i.code);
      }
      for (const auto& c : codes) ++stats[c].times_introduced;
    });
  }

  std::map<std::string, std::pair<double, std::size_t>> change;
  for (const auto& r : records) {
    if (!scored(r)) continue;
    walk(r, [&](const IterationTrace& t, const std::vector<Issue>& before, const std::vector<Issue>& after) {
      const auto selected = selected_aspects(t);
      const auto b = code_counts(before);
      const auto a = code_counts(after);
      for (auto& [code, stat] : stats) {
        if (selected[aspect_index(stat.aspect)]) continue;
        const long nb = b.count(code) ? b.at(code) : 0;
        const long na = a.count(code) ? a.at(code) : 0;
        auto& acc = change[code];
        acc.first += static_cast<double>(na - nb);
        ++acc.second;
      }
    });
  }

  std::vector<IssueStat> out;
  for (auto& [code, stat] : stats) {
    if (stat.initial_count > 0 && stat.initial_count >= min_occurrences) {
      const double rate = 1.0 - static_cast<double>(stat.after_count) / static_cast<double>(stat.initial_count);
      stat.resolution_rate = std::clamp(rate, 0.0, 1.0);
    }
    if (auto it = change.find(code); it != change.end()) stat.avg_change = mean(it->second.first, it->second.second);
    out.push_back(stat);
  }
  return out;
}

std::vector<CategoryIntroduction> category_introduction(std::span<const RunRecord> records) {
  std::vector<CategoryIntroduction> out(kAllAspects.size());
  for (std::size_t k = 0; k < kAllAspects.size(); ++k) out[k].aspect = kAllAspects[k];
  for (const auto& s : issue_stats(records, 0)) {
    auto& c = out[aspect_index(s.aspect)];
    c.times_introduced += s.times_introduced;
    c.codes_introduced += s.times_introduced > 0 ? 1 : 0;
  }
  std::array<double, 5> sums{};
  std::array<std::size_t, 5> counts{};
  for (const auto& r : records) {
    if (!scored(r)) continue;
    walk(r, [&](const IterationTrace& t, const std::vector<Issue>& before, const std::vector<Issue>& after) {
      const auto selected = selected_aspects(t);
      const auto b = aspect_counts(before);
      const auto a = aspect_counts(after);
      for (std::size_t k = 0; k < 5; ++k) {
        if (selected[k]) continue;
        sums[k] += static_cast<double>(a[k] - b[k]);
        ++counts[k];
      }
    });
  }
  for (std::size_t k = 0; k < 5; ++k) out[k].avg_change = mean(sums[k], counts[k]);
  return out;
}

std::vector<CurvePoint> curves(std::span<const RunRecord> records, int max_iterations) {
  std::vector<CurvePoint> points;
  std::size_t runs = 0;
  for (const auto& r : records) runs += scored(r) ? 1 : 0;
  for (int i = 0; i <= max_iterations; ++i) {
    CurvePoint p;
    p.iteration_index = i;
    double severity = 0.0;
    const auto index = static_cast<std::size_t>(i);
    for (const auto& r : records) {
      if (!scored(r)) continue;
      FitnessScore entering = r.initial->fitness;
      if (index > 0) {
        entering = index <= r.traces.size() ? r.traces[index - 1].current_fitness_after : r.final_candidate->fitness;
      }
      severity += static_cast<double>(entering.total_severity);
      if (r.traces.size() > index) {
        ++p.active_runs;
        const auto& t = r.traces[index];
        const FitnessScore before = index == 0 ? r.initial->fitness : r.traces[index - 1].current_fitness_after;
        if (t.accepted && t.proposal_fitness > before) ++p.improvements;
      }
    }
    p.mean_total_severity = runs == 0 ? 0.0 : severity / static_cast<double>(runs);
    p.probability_of_improvement =
        p.active_runs == 0 ? 0.0 : static_cast<double>(p.improvements) / static_cast<double>(p.active_runs);
    points.push_back(p);
  }
  return points;
}

CorrelationCell initial_final_correlation(std::span<const RunRecord> records, const PermutationOptions& options) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : records) {
    if (!scored(r)) continue;
    x.push_back(static_cast<double>(r.initial->issues.size()));
    y.push_back(static_cast<double>(r.final_candidate->issues.size()));
  }
  CorrelationCell cell;
  cell.samples = x.size();
  try {
    const auto result = options.parallel
                            ? permutation_test_parallel(x, y, options.permutations, options.seed)
                            : permutation_test_serial(x, y, options.permutations, options.seed);
    cell.rho = result.rho;
    cell.p_value = result.p_value;
  } catch (const Error& e) {
    if (e.code() != Errc::degenerate_input) throw;
  }
  return cell;
}

SelectionEffectMatrix selection_effects(std::span<const RunRecord> records) {
  std::array<std::vector<double>, 5> selected;
  std::array<std::vector<double>, 5> delta;
  for (const auto& r : records) {
    if (!scored(r)) continue;
    walk(r, [&](const IterationTrace& t, const std::vector<Issue>& before, const std::vector<Issue>&) {
      if (!t.has_proposal()) return;
      const auto s = selected_aspects(t);
      const auto b = aspect_counts(before);
      const auto p = aspect_counts(t.proposal_issues);
      for (std::size_t k = 0; k < 5; ++k) {
        selected[k].push_back(s[k] ? 1.0 : 0.0);
        delta[k].push_back(static_cast<double>(p[k] - b[k]));
      }
    });
  }
  SelectionEffectMatrix m;
  m.samples = selected[0].size();
  for (std::size_t a = 0; a < 5; ++a) {
    for (std::size_t b = 0; b < 5; ++b) {
      auto& cell = m.cells[a][b];
      cell.samples = m.samples;
      try {
        cell.rho = spearman(selected[a], delta[b]);
      } catch (const Error& e) {
        if (e.code() != Errc::degenerate_input) throw;
      }
    }
  }
  return m;
}

}  // namespace qrefine
