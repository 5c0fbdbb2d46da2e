#include <doctest.h>

#include "qrefine/error.hpp"
#include "qrefine/prompts.hpp"
#include "qrefine/rule_analyzer.hpp"
#include "qrefine/scripted.hpp"
#include "test_helpers.hpp"

using namespace qrefine;

namespace {

struct Fixture {
  RuleAnalyzer rules = RuleAnalyzer::from_file(testing::fixture_corpus() / "rules.json");
  std::filesystem::path fixes = testing::fixture_corpus() / "fix_table.json";
  PromptTemplates templates = PromptTemplates::builtin();
  WeightTable weights = WeightTable::defaults();

  PromptBundle repair(const std::string& code, const TestVerdict& verdict = TestVerdict::passed()) const {
    auto issues = rules.analyze(code);
    const auto c = make_candidate(code, issues, verdict, weights, Origin::initial, 0);
    return build_repair_prompt(c, issues, {}, verdict, templates);
  }
};

}  // namespace

TEST_CASE("echo returns the candidate unchanged") {
  Fixture f;
  const std::string code = "import subprocess\nsubprocess.call(c, shell=True)  \nx = 1\n";
  const auto reply = scripted_reply(f.repair(code), ScriptedBehavior::parse("echo", {}));
  CHECK(extract_code(reply) == code);
}

TEST_CASE("resolve-tagged applies the fix table to tagged ranges") {
  Fixture f;
  const auto script = ScriptedBehavior::parse("resolve-tagged", f.fixes);
  const std::string code = "import subprocess\n\n\ndef run(c):\n    return subprocess.call(c, shell=True)\n";
  const auto fixed = extract_code(scripted_reply(f.repair(code), script));
  CHECK(fixed ==
        "\"\"\"Module docstring.\"\"\"\nimport subprocess\n\n\ndef run(c):\n    return subprocess.call(c, shell=False) \n");
  const auto after = f.rules.analyze(fixed);
  REQUIRE(after.size() == 1);
  CHECK(after[0].code == "C0303");
  CHECK(f.rules.analyze(extract_code(scripted_reply(f.repair(fixed), script))).empty());
}

TEST_CASE("stacked issues on one line are all resolved") {
  Fixture f;
  const auto script = ScriptedBehavior::parse("resolve-tagged", f.fixes);
  const std::string code = "\"\"\"Doc.\"\"\"\nwith open(p) as h:  \n    pass\n";
  const auto bundle = f.repair(code);
  CHECK(bundle.user_message.find("(trailing-whitespace)\nUsing open") != std::string::npos);
  const auto fixed = extract_code(scripted_reply(bundle, script));
  CHECK(fixed == "\"\"\"Doc.\"\"\"\nwith open(p, encoding=\"utf-8\") as h:\n    pass\n");
}

TEST_CASE("keep rules leave stubborn issues in place") {
  Fixture f;
  const auto script = ScriptedBehavior::parse("resolve-tagged", f.fixes);
  const std::string code = "\"\"\"Doc.\"\"\"\ntry:\n    x = 1\nexcept Exception:\n    x = 0\n";
  CHECK(extract_code(scripted_reply(f.repair(code), script)) == code);
}

TEST_CASE("issues without a fix-table entry are rejected") {
  Fixture f;
  const auto script = ScriptedBehavior::parse("resolve-tagged", {});
  try {
    scripted_reply(f.repair("x = 1\n"), script);
    FAIL("expected unknown_issue_code");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::unknown_issue_code);
  }
}

TEST_CASE("inject appends defects after resolving") {
  Fixture f;
  const auto script = ScriptedBehavior::parse("inject:B307,C0303", f.fixes);
  const auto out = extract_code(scripted_reply(f.repair("\"\"\"Doc.\"\"\"\nx = 1\n"), script));
  std::vector<std::string> codes;
  for (const auto& i : f.rules.analyze(out)) codes.push_back(i.code);
  CHECK(codes == std::vector<std::string>{"B307", "C0303"});
  CHECK_THROWS_AS(ScriptedBehavior::parse("inject:Z9999", {}), Error);
  CHECK_THROWS_AS(ScriptedBehavior::parse("inject", {}), Error);
}

TEST_CASE("canned replies play in order and repeat the last") {
  ScriptedBehavior script;
  script.kind = ScriptedBehavior::Kind::canned;
  script.canned_replies = {"one", "two"};
  ScriptedProvider provider(script);
  const PromptBundle b{"s", "u", PromptKind::repair};
  CHECK(provider.complete(b) == "one");
  CHECK(provider.complete(b) == "two");
  CHECK(provider.complete(b) == "two");
  CHECK_THROWS_AS(ScriptedBehavior::parse("canned", {}), Error);
  CHECK_THROWS_AS(ScriptedBehavior::parse("whatever", {}), Error);
}

TEST_CASE("scripted signature and initial replies") {
  Fixture f;
  Problem p;
  p.task_prompt = "Task.";
  p.test_suite = "from solution import alpha, beta\nfrom solution import gamma as g\n";
  const auto script = ScriptedBehavior::parse("echo", {});
  const auto sig = parse_signature_reply(scripted_reply(build_signature_prompt(p, f.templates), script));
  CHECK(sig.required_names == std::vector<std::string>{"alpha", "beta", "gamma"});
  const auto code = extract_code(scripted_reply(build_initial_prompt(p, sig, f.templates), script));
  CHECK(code.find("def alpha():") != std::string::npos);
  CHECK(code.find("def gamma():") != std::string::npos);
  CHECK(f.rules.analyze(code).empty());
}
