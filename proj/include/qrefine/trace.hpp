#pragma once

// Trace files: JSON Lines, one header line followed by one RunRecord per
// line. Everything that varies between otherwise identical runs (creation
// time, provider mode) lives under the header's "provenance" key.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrefine/record.hpp"

namespace qrefine {

inline constexpr std::string_view kTraceFormat = "qrefine-trace/1";

struct TraceHeader {
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json tool_versions = nlohmann::json::object();
  std::string corpus_hash;
  std::uint64_t run_seed = 0;
  std::string issues_selected;
  nlohmann::json provenance = nlohmann::json::object();

  friend bool operator==(const TraceHeader&, const TraceHeader&) = default;
};

nlohmann::json to_json(const TraceHeader& header);
TraceHeader trace_header_from_json(const nlohmann::json& j);

struct TraceFile {
  TraceHeader header;
  std::vector<RunRecord> records;
  std::vector<std::string> warnings;
};

// Throws Errc::trace_parse_error with the 1-based line number. A final line
// without its terminating newline that does not parse is skipped with a warning.
TraceFile load_traces(const std::filesystem::path& path);

// Single-writer appender; append is safe to call from several threads.
class TraceWriter {
 public:
  // Creates the file with `header`, or with resume=true reopens an existing
  // file, drops a torn final line and continues after the recorded problems.
  TraceWriter(const std::filesystem::path& path, const TraceHeader& header, std::set<std::string> known_ids,
              bool resume);

  // Ids already present when the writer was opened.
  const std::set<std::string>& recorded() const { return recorded_; }

  // Serializes the record as one line and flushes it. Throws
  // Errc::validation_error for ids outside the corpus, Errc::io_error on write failure.
  void append(const RunRecord& record);

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::set<std::string> known_ids_;
  std::set<std::string> recorded_;
  std::ofstream out_;
  std::mutex mutex_;
};

}  // namespace qrefine
