#include <doctest.h>

#include "qrefine/error.hpp"
#include "qrefine/trace.hpp"
#include "test_helpers.hpp"

using namespace qrefine;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunRecord sample_record(const std::string& id) {
  const auto w = WeightTable::defaults();
  const auto issue = testing::pylint_issue("C0114", 1, "Missing module docstring (missing-module-docstring)");
  RunRecord r;
  r.problem_id = id;
  r.tested = true;
  r.signature = {{"f"}, SignatureSpec::Source::dataset};
  r.initial = make_candidate("def f():\n    pass\n", {issue}, TestVerdict::passed(), w, Origin::initial, 0);
  r.final_candidate = make_candidate("\"\"\"Doc.\"\"\"\ndef f():\n    pass\n", {}, TestVerdict::passed(), w,
                                     Origin::mutation, 1);
  IterationTrace t;
  t.iteration_index = 0;
  t.selected = {issue};
  t.prompt_hash = std::string(64, 'a');
  t.proposal_code_hash = std::string(64, 'b');
  t.proposal_verdict = TestVerdict::passed();
  t.proposal_fitness = {true, 0};
  t.accepted = true;
  t.current_fitness_after = {true, 0};
  r.traces = {t};
  return r;
}

TraceHeader sample_header() {
  return TraceHeader{json{{"loop", json{{"max_iterations", 10}}}}, json{{"rules", "x"}}, "hash", 7, "3",
                     json{{"created_at", "2026-01-01T00:00:00Z"}}};
}

fs::path scratch_file(const std::string& name) {
  const auto path = fs::temp_directory_path() / name;
  fs::remove(path);
  return path;
}

}  // namespace

TEST_CASE("records validate and round trip") {
  const auto r = sample_record("p1");
  CHECK_NOTHROW(validate(r, 10));
  CHECK(run_record_from_json(to_json(r)) == r);
  auto failed_step = r;
  failed_step.traces[0] = IterationTrace{};
  failed_step.traces[0].error = "empty-reply: reply contains no code";
  failed_step.traces[0].current_fitness_after = r.initial->fitness;
  failed_step.final_candidate = r.initial;
  const auto j = to_json(failed_step);
  CHECK_FALSE(j.at("iterations").at(0).contains("proposal_issues"));
  CHECK(run_record_from_json(j) == failed_step);

  auto decreasing = r;
  decreasing.traces[0].current_fitness_after = {false, 0};
  CHECK_THROWS_AS(validate(decreasing, 10), Error);
  auto too_long = r;
  too_long.traces.assign(11, r.traces[0]);
  CHECK_THROWS_AS(validate(too_long, 10), Error);
}

TEST_CASE("trace files round trip") {
  const auto path = scratch_file("qrefine-trace-rt.jsonl");
  {
    TraceWriter writer(path, sample_header(), {"p1", "p2"}, false);
    writer.append(sample_record("p1"));
    writer.append(sample_record("p2"));
    try {
      writer.append(sample_record("p3"));
      FAIL("expected validation_error");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::validation_error);
    }
  }
  const auto file = load_traces(path);
  CHECK(file.header == sample_header());
  REQUIRE(file.records.size() == 2);
  CHECK(file.records[1] == sample_record("p2"));
  CHECK(file.warnings.empty());
  fs::remove(path);
}

TEST_CASE("torn final lines are skipped and dropped on resume") {
  const auto path = scratch_file("qrefine-trace-torn.jsonl");
  {
    TraceWriter writer(path, sample_header(), {"p1", "p2"}, false);
    writer.append(sample_record("p1"));
  }
  {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << to_json(sample_record("p2")).dump().substr(0, 40);
  }
  const auto torn = load_traces(path);
  CHECK(torn.records.size() == 1);
  CHECK(torn.warnings.size() == 1);
  {
    TraceWriter writer(path, sample_header(), {"p1", "p2"}, true);
    CHECK(writer.recorded() == std::set<std::string>{"p1"});
    writer.append(sample_record("p2"));
  }
  const auto resumed = load_traces(path);
  CHECK(resumed.records.size() == 2);
  CHECK(resumed.warnings.empty());

  auto other = sample_header();
  other.run_seed = 8;
  try {
    TraceWriter writer(path, other, {"p1", "p2"}, true);
    FAIL("expected config_error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
  }
  auto later = sample_header();
  later.provenance["created_at"] = "2027-01-01T00:00:00Z";
  CHECK_NOTHROW(TraceWriter(path, later, {"p1", "p2"}, true));
  fs::remove(path);
}

TEST_CASE("corrupt traces report line numbers") {
  const auto path = scratch_file("qrefine-trace-bad.jsonl");
  testing::spit(path, to_json(sample_header()).dump() + "\n{not json}\n" + to_json(sample_record("p1")).dump() + "\n");
  try {
    load_traces(path);
    FAIL("expected trace_parse_error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::trace_parse_error);
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  testing::spit(path, to_json(sample_record("p1")).dump() + "\n");
  CHECK_THROWS_AS(load_traces(path), Error);
  testing::spit(path, "");
  CHECK_THROWS_AS(load_traces(path), Error);
  fs::remove(path);
}
