#include "qrefine/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <json.hpp>

#include "qrefine/error.hpp"
#include "qrefine/hashing.hpp"
#include "qrefine/text.hpp"

namespace qrefine {

namespace fs = std::filesystem;

namespace {

const std::regex kIdPattern{R"([A-Za-z0-9_][A-Za-z0-9_.-]*)"};

std::optional<std::string> read_optional(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string read_required(const fs::path& path) {
  auto content = read_optional(path);
  if (!content) throw Error(Errc::corpus_parse_error, path.string() + ": missing or unreadable");
  return *content;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw Error(Errc::io_error, "cannot write " + path.string());
}

[[noreturn]] void parse_failure(const fs::path& file, std::size_t line, const std::string& what) {
  throw Error(Errc::corpus_parse_error, file.string() + ":" + std::to_string(line) + ": " + what);
}

}  // namespace

fs::path corpus_root(const fs::path& path) {
  std::error_code ec;
  if (fs::is_directory(path, ec)) return path;
  return path.parent_path().empty() ? fs::path(".") : path.parent_path();
}

std::vector<std::string> read_manifest(const fs::path& path) {
  const fs::path manifest = fs::is_directory(path) ? path / "manifest.txt" : path;
  const auto content = read_optional(manifest);
  if (!content) throw Error(Errc::corpus_parse_error, manifest.string() + ": missing manifest");
  std::vector<std::string> ids;
  std::set<std::string> seen;
  std::size_t number = 0;
  for (const auto& raw : split_lines(*content)) {
    ++number;
    const auto line = std::string(trim(raw));
    if (line.empty() || line.front() == '#') continue;
    if (!std::regex_match(line, kIdPattern)) parse_failure(manifest, number, "invalid problem id '" + line + "'");
    if (!seen.insert(line).second) {
      throw Error(Errc::duplicate_id, manifest.string() + ":" + std::to_string(number) + ": duplicate id '" + line + "'");
    }
    ids.push_back(line);
  }
  return ids;
}

Problem load_problem(const fs::path& root, const std::string& id) {
  const fs::path dir = root / id;
  if (!fs::is_directory(dir)) throw Error(Errc::corpus_parse_error, dir.string() + ": missing problem directory");
  Problem p;
  p.id = id;
  p.task_prompt = read_required(dir / "prompt.txt");
  if (trim(p.task_prompt).empty()) parse_failure(dir / "prompt.txt", 1, "empty task prompt");
  p.test_suite = read_optional(dir / "test_suite.py");
  p.initial_code = read_optional(dir / "initial.py");
  p.module_name = "solution";
  if (auto meta = read_optional(dir / "meta")) {
    std::size_t number = 0;
    for (const auto& raw : split_lines(*meta)) {
      ++number;
      const auto line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      const auto colon = line.find(':');
      if (colon == std::string_view::npos) parse_failure(dir / "meta", number, "expected `key: value`");
      const auto key = std::string(trim(line.substr(0, colon)));
      const auto value = std::string(trim(line.substr(colon + 1)));
      if (key == "module_name") {
        if (!is_identifier(value)) parse_failure(dir / "meta", number, "invalid module name '" + value + "'");
        p.module_name = value;
      }
    }
  }
  if (auto sigs = read_optional(dir / "signatures.txt")) {
    std::size_t number = 0;
    for (const auto& raw : split_lines(*sigs)) {
      ++number;
      const auto name = std::string(trim(raw));
      if (name.empty()) continue;
      if (!is_identifier(name)) parse_failure(dir / "signatures.txt", number, "invalid identifier '" + name + "'");
      if (std::find(p.required_signatures.begin(), p.required_signatures.end(), name) == p.required_signatures.end()) {
        p.required_signatures.push_back(name);
      }
    }
  }
  return p;
}

std::vector<Problem> load_corpus(const fs::path& path) {
  const auto root = corpus_root(path);
  std::vector<Problem> problems;
  for (const auto& id : read_manifest(path)) problems.push_back(load_problem(root, id));
  std::sort(problems.begin(), problems.end(), [](const Problem& a, const Problem& b) { return a.id < b.id; });
  return problems;
}

CorpusScan scan_corpus(const fs::path& path) {
  const auto root = corpus_root(path);
  CorpusScan scan;
  for (const auto& id : read_manifest(path)) {
    try {
      scan.problems.push_back(load_problem(root, id));
    } catch (const Error& e) {
      scan.failures.push_back({id, e.what()});
    }
  }
  std::sort(scan.problems.begin(), scan.problems.end(), [](const Problem& a, const Problem& b) { return a.id < b.id; });
  std::sort(scan.failures.begin(), scan.failures.end(),
            [](const CorpusEntryFailure& a, const CorpusEntryFailure& b) { return a.id < b.id; });
  return scan;
}

std::string corpus_hash(const fs::path& path) {
  const auto root = corpus_root(path);
  const fs::path manifest = fs::is_directory(path) ? path / "manifest.txt" : path;
  std::string material = "manifest\n" + read_required(manifest);
  auto ids = read_manifest(path);
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    const fs::path dir = root / id;
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
      material += std::string(1, '\0') + "missing:" + id;
      continue;
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      const auto content = read_required(file);
      material += std::string(1, '\0') + fs::relative(file, root).generic_string() + '\0' +
                  std::to_string(content.size()) + '\0' + content;
    }
  }
  return sha256_hex(material);
}

void write_problem(const fs::path& root, const Problem& problem) {
  if (!std::regex_match(problem.id, kIdPattern)) {
    throw Error(Errc::invalid_argument, "invalid problem id '" + problem.id + "'");
  }
  const fs::path dir = root / problem.id;
  fs::create_directories(dir);
  write_file(dir / "prompt.txt", problem.task_prompt);
  if (problem.test_suite) write_file(dir / "test_suite.py", *problem.test_suite);
  if (problem.initial_code) write_file(dir / "initial.py", *problem.initial_code);
  if (!problem.required_signatures.empty()) {
    std::string sigs;
    for (const auto& n : problem.required_signatures) sigs += n + "\n";
    write_file(dir / "signatures.txt", sigs);
  }
  write_file(dir / "meta", "module_name: " + problem.module_name + "\n");
}

void write_manifest(const fs::path& root, const std::vector<std::string>& ids) {
  fs::create_directories(root);
  std::string content;
  for (const auto& id : ids) content += id + "\n";
  write_file(root / "manifest.txt", content);
}

std::size_t convert_corpus(const fs::path& dataset, const fs::path& tests_dir, const fs::path& out_dir,
                           const std::string& module_name) {
  std::ifstream in(dataset);
  if (!in) throw Error(Errc::io_error, "cannot read " + dataset.string());
  if (!is_identifier(module_name)) throw Error(Errc::invalid_argument, "invalid module name '" + module_name + "'");
  std::vector<Problem> problems;
  std::set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      parse_failure(dataset, number, e.what());
    }
    if (!j.contains("ID") || !j.contains("Prompt")) parse_failure(dataset, number, "expected \"ID\" and \"Prompt\"");
    Problem p;
    std::string id = j.at("ID").get<std::string>();
    if (ends_with(id, ".py")) id.resize(id.size() - 3);
    if (!std::regex_match(id, kIdPattern)) parse_failure(dataset, number, "unusable id '" + id + "'");
    if (!seen.insert(id).second) {
      throw Error(Errc::duplicate_id, dataset.string() + ":" + std::to_string(number) + ": duplicate id '" + id + "'");
    }
    p.id = id;
    p.task_prompt = j.at("Prompt").get<std::string>();
    p.module_name = module_name;
    if (j.contains("Test") && j.at("Test").is_string()) p.test_suite = j.at("Test").get<std::string>();
    if (j.contains("Signatures") && j.at("Signatures").is_array()) {
      p.required_signatures = j.at("Signatures").get<std::vector<std::string>>();
    }
    if (!p.test_suite && !tests_dir.empty()) {
      for (const auto& candidate : {tests_dir / (id + "_test.py"), tests_dir / ("test_" + id + ".py")}) {
        if (auto content = read_optional(candidate)) {
          p.test_suite = std::move(content);
          break;
        }
      }
    }
    problems.push_back(std::move(p));
  }
  std::vector<std::string> ids;
  for (const auto& p : problems) {
    write_problem(out_dir, p);
    ids.push_back(p.id);
  }
  std::sort(ids.begin(), ids.end());
  write_manifest(out_dir, ids);
  return problems.size();
}

}  // namespace qrefine
