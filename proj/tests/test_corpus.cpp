#include <doctest.h>

#include "qrefine/corpus.hpp"
#include "qrefine/error.hpp"
#include "test_helpers.hpp"

using namespace qrefine;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

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

TEST_CASE("fixture corpus loads") {
  const auto problems = load_corpus(testing::fixture_corpus());
  REQUIRE(problems.size() == 20);
  CHECK(problems.front().id == "p01");
  std::size_t tested = 0;
  for (const auto& p : problems) tested += p.tested() ? 1 : 0;
  CHECK(tested == 18);
  const auto& p16 = problems[15];
  CHECK(p16.required_signatures == std::vector<std::string>{"compute_total"});
  CHECK(p16.module_name == "solution");
  CHECK_FALSE(problems[19].initial_code);
  CHECK(problems[4].required_signatures.empty());
  CHECK(load_corpus(testing::fixture_corpus() / "manifest.txt").size() == 20);
}

TEST_CASE("problem files round trip") {
  const auto dir = scratch("qrefine-corpus-rt");
  Problem p{"task_1", "Do it.\n", std::string("from m import f\n"), {"f", "g"}, "m", std::string("def f():\n    pass\n")};
  write_problem(dir, p);
  write_manifest(dir, {"task_1"});
  CHECK(load_problem(dir, "task_1") == p);
  const auto hash = corpus_hash(dir);
  CHECK(hash == corpus_hash(dir / "manifest.txt"));
  testing::spit(dir / "task_1" / "prompt.txt", "Do it differently.\n");
  CHECK(corpus_hash(dir) != hash);
  fs::remove_all(dir);
}

TEST_CASE("manifest errors") {
  const auto dir = scratch("qrefine-corpus-manifest");
  testing::spit(dir / "manifest.txt", "# comment\na\n\nb\na\n");
  CHECK(error_of([&] { read_manifest(dir); }) == Errc::duplicate_id);
  testing::spit(dir / "manifest.txt", "bad id\n");
  CHECK(error_of([&] { read_manifest(dir); }) == Errc::corpus_parse_error);
  CHECK(error_of([&] { read_manifest(dir / "nowhere"); }) == Errc::corpus_parse_error);
  fs::remove_all(dir);
}

TEST_CASE("malformed entries are strict errors and lenient failures") {
  const auto dir = scratch("qrefine-corpus-bad");
  write_problem(dir, Problem{"good", "Task.", std::nullopt, {}, "solution", std::nullopt});
  fs::create_directories(dir / "no_prompt");
  write_problem(dir, Problem{"bad_meta", "Task.", std::nullopt, {}, "solution", std::nullopt});
  testing::spit(dir / "bad_meta" / "meta", "module_name solution\n");
  write_problem(dir, Problem{"bad_sig", "Task.", std::nullopt, {}, "solution", std::nullopt});
  testing::spit(dir / "bad_sig" / "signatures.txt", "ok\nnot an identifier\n");
  write_manifest(dir, {"good", "no_prompt", "bad_meta", "bad_sig", "absent"});

  CHECK(error_of([&] { load_corpus(dir); }) == Errc::corpus_parse_error);
  const auto scan = scan_corpus(dir);
  REQUIRE(scan.problems.size() == 1);
  CHECK(scan.problems[0].id == "good");
  REQUIRE(scan.failures.size() == 4);
  CHECK(scan.failures[0].id == "absent");
  CHECK(scan.failures[1].message.find("meta:1") != std::string::npos);
  CHECK(scan.failures[2].message.find("signatures.txt:2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("upstream datasets convert to the corpus layout") {
  const auto dir = scratch("qrefine-convert");
  testing::spit(dir / "dataset.jsonl",
                "{\"ID\": \"CWE-020_author_1.py\", \"Prompt\": \"Parse a URL.\"}\n"
                "\n"
                "{\"ID\": \"CWE-078_codeql_2.py\", \"Prompt\": \"Run a command.\", \"Test\": \"from solution import run\\n\", \"Signatures\": [\"run\"]}\n"
                "{\"ID\": \"CWE-089_x.py\", \"Prompt\": \"Query.\"}\n");
  testing::spit(dir / "tests" / "CWE-020_author_1_test.py", "from solution import parse\n");
  testing::spit(dir / "tests" / "test_CWE-089_x.py", "from solution import query\n");
  CHECK(convert_corpus(dir / "dataset.jsonl", dir / "tests", dir / "out", "solution") == 3);
  const auto problems = load_corpus(dir / "out");
  REQUIRE(problems.size() == 3);
  CHECK(problems[0].id == "CWE-020_author_1");
  CHECK(problems[0].test_suite == "from solution import parse\n");
  CHECK(problems[1].required_signatures == std::vector<std::string>{"run"});
  CHECK(problems[2].test_suite == "from solution import query\n");

  testing::spit(dir / "dup.jsonl", "{\"ID\": \"a\", \"Prompt\": \"x\"}\n{\"ID\": \"a.py\", \"Prompt\": \"y\"}\n");
  CHECK(error_of([&] { convert_corpus(dir / "dup.jsonl", {}, dir / "out2", "solution"); }) == Errc::duplicate_id);
  testing::spit(dir / "broken.jsonl", "{\"ID\": \"a\"}\n");
  CHECK(error_of([&] { convert_corpus(dir / "broken.jsonl", {}, dir / "out3", "solution"); }) ==
        Errc::corpus_parse_error);
  fs::remove_all(dir);
}
