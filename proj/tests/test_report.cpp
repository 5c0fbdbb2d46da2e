#include <doctest.h>

#include "qrefine/corpus.hpp"
#include "qrefine/engine.hpp"
#include "qrefine/error.hpp"
#include "qrefine/report.hpp"
#include "qrefine/rule_analyzer.hpp"
#include "qrefine/scripted.hpp"
#include "test_helpers.hpp"

using namespace qrefine;
namespace fs = std::filesystem;

namespace {

TraceFile fixture_trace(const std::string& label) {
  const auto analyzer = RuleAnalyzer::from_file(testing::fixture_corpus() / "rules.json");
  ScriptedVerdictProvider verdicts;
  ScriptedProvider provider(ScriptedBehavior::parse("resolve-tagged", testing::fixture_corpus() / "fix_table.json"));
  const auto templates = PromptTemplates::builtin();
  LoopConfig config;
  config.selection.issues_selected = IssuesSelected::parse(label);
  TraceFile trace;
  trace.header.config = nlohmann::json{{"loop", to_json(config)}};
  trace.header.issues_selected = config.selection.issues_selected.label();
  trace.records = run_corpus(load_corpus(testing::fixture_corpus()), config,
                             Services{analyzer, verdicts, provider, templates}, {});
  return trace;
}

Report fixture_report() {
  ReportOptions options;
  options.min_occurrences = 1;
  options.permutations = 200;
  Report report;
  report.options = options;
  report.configurations.push_back(analyze_trace(fixture_trace("3"), "three.jsonl", options));
  report.configurations.push_back(analyze_trace(fixture_trace("all"), "all.jsonl", options));
  return report;
}

}  // namespace

TEST_CASE("configuration analytics follow the trace header") {
  const auto report = fixture_report();
  const auto& c = report.configurations.at(0);
  CHECK(c.label == "3");
  CHECK(c.max_iterations == 10);
  CHECK(c.curve.size() == 11);
  CHECK(c.problems == 20);
  CHECK(c.aborted == 0);
  CHECK(report.configurations.at(1).label == "All");
}

TEST_CASE("structured reports round trip") {
  const auto report = fixture_report();
  const auto j = to_json(report);
  CHECK(report_from_json(j) == report);
  CHECK(report_from_json(nlohmann::json::parse(j.dump())) == report);
  CHECK_THROWS_AS(report_from_json(nlohmann::json{{"options", 1}}), Error);
}

TEST_CASE("text report carries every table") {
  const auto text = render_text(fixture_report());
  for (const char* heading :
       {"Issue prevalence", "Issue counts by aspect", "Functional correctness", "Spearman correlation",
        "Issue introduction by category", "Highest resolution rates", "Selection effects", "Per-iteration curves",
        "Insecure", "Convention", "Refactor", "Warning"}) {
    CAPTURE(heading);
    CHECK(text.find(heading) != std::string::npos);
  }
}

TEST_CASE("report files per format") {
  const auto dir = fs::temp_directory_path() / "qrefine-report-test";
  fs::remove_all(dir);
  const auto report = fixture_report();
  CHECK(write_report(report, parse_report_format("text"), dir).size() == 1);
  CHECK(fs::exists(dir / "report.txt"));
  write_report(report, parse_report_format("structured"), dir);
  CHECK(report_from_json(nlohmann::json::parse(testing::slurp(dir / "report.json"))) == report);
  const auto plots = write_report(report, parse_report_format("plot-data"), dir);
  CHECK(plots.size() == 7);
  for (const char* name : {"mean_severity.csv", "probability_of_improvement.csv", "active_runs.csv",
                           "aspect_distribution.csv", "issue_distribution.csv", "selection_effects_select_3.csv",
                           "selection_effects_select_All.csv"}) {
    CAPTURE(name);
    CHECK(fs::exists(dir / name));
  }
  const auto severity = testing::slurp(dir / "mean_severity.csv");
  CHECK(severity.rfind("iteration,select_3,select_All\n0,", 0) == 0);
  CHECK(std::count(severity.begin(), severity.end(), '\n') == 12);
  CHECK_THROWS_AS(parse_report_format("pdf"), Error);
  fs::remove_all(dir);
}
