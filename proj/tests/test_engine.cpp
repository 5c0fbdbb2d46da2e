#include <doctest.h>

#include <atomic>

#include "qrefine/corpus.hpp"
#include "qrefine/engine.hpp"
#include "qrefine/error.hpp"
#include "qrefine/rule_analyzer.hpp"
#include "qrefine/scripted.hpp"
#include "test_helpers.hpp"

using namespace qrefine;
namespace fs = std::filesystem;

namespace {

struct Fixture {
  RuleAnalyzer analyzer = RuleAnalyzer::from_file(testing::fixture_corpus() / "rules.json");
  ScriptedVerdictProvider verdicts;
  ScriptedProvider provider{
      ScriptedBehavior::parse("resolve-tagged", testing::fixture_corpus() / "fix_table.json")};
  PromptTemplates templates = PromptTemplates::builtin();
  std::vector<Problem> problems = load_corpus(testing::fixture_corpus());
  LoopConfig config;

  Fixture() { config.selection.issues_selected = IssuesSelected::count(3); }
  Services services() { return Services{analyzer, verdicts, provider, templates}; }
  const Problem& problem(const std::string& id) const {
    for (const auto& p : problems) {
      if (p.id == id) return p;
    }
    throw std::runtime_error("no problem " + id);
  }
};

class BrokenHarness final : public VerdictProvider {
 public:
  TestVerdict run(const Problem&, const std::string&, double) const override {
    TestVerdict v;
    v.status = VerdictStatus::harness_error;
    return v;
  }
  nlohmann::json describe() const override { return "broken"; }
};

}  // namespace

TEST_CASE("refine keeps the loop invariants on every fixture problem") {
  Fixture f;
  for (const auto& p : f.problems) {
    CAPTURE(p.id);
    const auto r = refine(p, f.config, f.services());
    REQUIRE(r.status == RunStatus::completed);
    CHECK_NOTHROW(validate(r, f.config.max_iterations));
    CHECK(r.final_candidate->fitness >= r.initial->fitness);
    CHECK(r.tested == p.tested());
  }
}

TEST_CASE("signatures are inferred from the tests when the dataset has none") {
  Fixture f;
  const auto& p = f.problem("p05");
  REQUIRE(p.required_signatures.empty());
  const auto r = refine(p, f.config, f.services());
  CHECK(r.signature.source == SignatureSpec::Source::inferred);
  CHECK(r.signature.required_names == std::vector<std::string>{"run_command"});
  const auto& listed = f.problem("p01");
  CHECK(refine(listed, f.config, f.services()).signature.source == SignatureSpec::Source::dataset);
}

TEST_CASE("missing initial code is generated") {
  Fixture f;
  const auto& p = f.problem("p20");
  REQUIRE_FALSE(p.initial_code);
  const auto r = refine(p, f.config, f.services());
  REQUIRE(r.status == RunStatus::completed);
  CHECK_FALSE(r.initial->code.empty());
}

TEST_CASE("a failing initial evaluation aborts the run") {
  Fixture f;
  BrokenHarness broken;
  const Services services{f.analyzer, broken, f.provider, f.templates};
  const auto r = refine(f.problem("p01"), f.config, services);
  CHECK(r.status == RunStatus::aborted);
  CHECK(r.traces.empty());
  REQUIRE(r.error);
  CHECK(r.error->rfind("aborted-run:", 0) == 0);
  CHECK_NOTHROW(validate(r, 10));
}

TEST_CASE("failed iterations are recorded and the loop continues") {
  Fixture f;
  ScriptedBehavior canned;
  canned.kind = ScriptedBehavior::Kind::canned;
  canned.canned_replies = {"```python\n\n```\n"};
  ScriptedProvider silent(canned);
  const Services services{f.analyzer, f.verdicts, silent, f.templates};
  const auto r = refine(f.problem("p02"), f.config, services);
  REQUIRE(r.status == RunStatus::completed);
  REQUIRE(r.traces.size() == 10);
  for (const auto& t : r.traces) {
    CHECK_FALSE(t.has_proposal());
    CHECK_FALSE(t.accepted);
    CHECK(t.current_fitness_after == r.initial->fitness);
  }
  CHECK(r.final_candidate == r.initial);
  CHECK_NOTHROW(validate(r, 10));
}

TEST_CASE("a perfect initial candidate runs no iterations") {
  Fixture f;
  Problem p = f.problem("p01");
  p.initial_code = "\"\"\"Module.\"\"\"\n\n\ndef " + p.required_signatures.at(0) + "(x):\n    \"\"\"Doc.\"\"\"\n    return x\n";
  const auto r = refine(p, f.config, f.services());
  CHECK(r.initial->fitness.perfect());
  CHECK(r.traces.empty());
}

TEST_CASE("run_corpus orders records, honours skip, preset and cancel") {
  Fixture f;
  const auto serial = run_corpus(f.problems, f.config, f.services(), {});
  REQUIRE(serial.size() == f.problems.size());
  for (std::size_t i = 1; i < serial.size(); ++i) CHECK(serial[i - 1].problem_id < serial[i].problem_id);

  CorpusRunOptions parallel;
  parallel.parallelism = 3;
  CHECK(run_corpus(f.problems, f.config, f.services(), parallel) == serial);

  CorpusRunOptions partial;
  partial.skip = {"p01", "p02"};
  partial.preset = {aborted_record("p00", false, "corpus-parse-error: broken entry")};
  const auto rest = run_corpus(f.problems, f.config, f.services(), partial);
  REQUIRE(rest.size() == f.problems.size() - 1);
  CHECK(rest.front().problem_id == "p00");
  CHECK(rest.front().status == RunStatus::aborted);
  CHECK(rest[1].problem_id == "p03");

  std::atomic<bool> cancel{true};
  CorpusRunOptions cancelled;
  cancelled.cancel = &cancel;
  CHECK(run_corpus(f.problems, f.config, f.services(), cancelled).empty());

  CorpusRunOptions bad;
  bad.parallelism = 0;
  CHECK_THROWS_AS(run_corpus(f.problems, f.config, f.services(), bad), Error);
}

TEST_CASE("run_corpus streams records to the trace writer") {
  Fixture f;
  const auto path = fs::temp_directory_path() / "qrefine-engine-trace.jsonl";
  fs::remove(path);
  std::set<std::string> ids;
  for (const auto& p : f.problems) ids.insert(p.id);
  std::vector<RunRecord> records;
  {
    TraceWriter writer(path, TraceHeader{}, ids, false);
    CorpusRunOptions options;
    options.writer = &writer;
    options.parallelism = 2;
    records = run_corpus(f.problems, f.config, f.services(), options);
  }
  CHECK(load_traces(path).records == records);
  fs::remove(path);
}
