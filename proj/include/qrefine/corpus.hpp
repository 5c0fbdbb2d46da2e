#pragma once

// Benchmark corpus on disk:
//
//   <root>/manifest.txt        problem ids, one per line ('#' comments allowed)
//   <root>/<id>/prompt.txt     task description (required)
//   <root>/<id>/test_suite.py  tests (optional; absent means untested)
//   <root>/<id>/signatures.txt required names, one per line (optional)
//   <root>/<id>/meta           `key: value` lines; module_name (default "solution")
//   <root>/<id>/initial.py     starting code (optional; generated when absent)

#include <filesystem>
#include <string>
#include <vector>

#include "qrefine/problem.hpp"

namespace qrefine {

struct CorpusEntryFailure {
  std::string id;
  std::string message;
};

struct CorpusScan {
  std::vector<Problem> problems;
  std::vector<CorpusEntryFailure> failures;
};

// Accepts the corpus directory or its manifest file.
std::filesystem::path corpus_root(const std::filesystem::path& path);

std::vector<std::string> read_manifest(const std::filesystem::path& path);
Problem load_problem(const std::filesystem::path& root, const std::string& id);

// Strict: any malformed entry throws (corpus_parse_error, duplicate_id).
std::vector<Problem> load_corpus(const std::filesystem::path& path);
// Lenient: malformed entries are collected as failures; the manifest itself
// must still be valid. Problems come back id-sorted.
CorpusScan scan_corpus(const std::filesystem::path& path);

// SHA-256 over the manifest and every file of every listed problem.
std::string corpus_hash(const std::filesystem::path& path);

void write_problem(const std::filesystem::path& root, const Problem& problem);
void write_manifest(const std::filesystem::path& root, const std::vector<std::string>& ids);

// Converts an upstream JSON Lines dataset (objects with "ID" and "Prompt",
// optionally "Test" and "Signatures") into the corpus layout. When tests_dir
// is given, `<stem>_test.py` or `test_<stem>.py` there supplies the test suite,
// where <stem> is the ID without a trailing ".py". Returns the problem count.
std::size_t convert_corpus(const std::filesystem::path& dataset, const std::filesystem::path& tests_dir,
                           const std::filesystem::path& out_dir, const std::string& module_name);

}  // namespace qrefine
