#include "qrefine/trace.hpp"

#include <spdlog/spdlog.h>

#include <sstream>

#include "qrefine/error.hpp"

namespace qrefine {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const TraceHeader& h) {
  return json{{"kind", "header"},
              {"format", kTraceFormat},
              {"config", h.config},
              {"tool_versions", h.tool_versions},
              {"corpus_hash", h.corpus_hash},
              {"run_seed", h.run_seed},
              {"issues_selected", h.issues_selected},
              {"provenance", h.provenance}};
}

TraceHeader trace_header_from_json(const json& j) {
  if (j.value("kind", "") != "header") throw Error(Errc::trace_parse_error, "first line is not a trace header");
  if (j.value("format", "") != kTraceFormat) {
    throw Error(Errc::trace_parse_error, "unsupported trace format '" + j.value("format", "") + "'");
  }
  try {
    TraceHeader h;
    h.config = j.at("config");
    h.tool_versions = j.at("tool_versions");
    h.corpus_hash = j.at("corpus_hash").get<std::string>();
    h.run_seed = j.at("run_seed").get<std::uint64_t>();
    h.issues_selected = j.at("issues_selected").get<std::string>();
    h.provenance = j.value("provenance", json::object());
    return h;
  } catch (const json::exception& e) {
    throw Error(Errc::trace_parse_error, std::string("malformed trace header: ") + e.what());
  }
}

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

TraceFile load_traces(const fs::path& path) {
  const std::string content = read_all(path);
  TraceFile file;
  std::size_t pos = 0;
  std::size_t number = 0;
  bool have_header = false;
  while (pos < content.size()) {
    const auto nl = content.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::string line = content.substr(pos, terminated ? nl - pos : std::string::npos);
    pos = terminated ? nl + 1 : content.size();
    ++number;
    const auto where = path.string() + ":" + std::to_string(number);
    if (line.empty()) continue;
    try {
      const auto doc = json::parse(line);
      if (!have_header) {
        file.header = trace_header_from_json(doc);
        have_header = true;
      } else {
        file.records.push_back(run_record_from_json(doc));
      }
    } catch (const std::exception& e) {
      if (!terminated && have_header) {
        file.warnings.push_back(where + ": skipped torn final line");
        break;
      }
      throw Error(Errc::trace_parse_error, where + ": " + e.what());
    }
  }
  if (!have_header) throw Error(Errc::trace_parse_error, path.string() + ": missing trace header");
  return file;
}

TraceWriter::TraceWriter(const fs::path& path, const TraceHeader& header, std::set<std::string> known_ids,
                         bool resume)
    : path_(path), known_ids_(std::move(known_ids)) {
  std::error_code ec;
  const bool existing = resume && fs::exists(path, ec) && fs::file_size(path, ec) > 0;
  if (existing) {
    const std::string content = read_all(path);
    const auto last_nl = content.rfind('\n');
    const std::size_t keep = last_nl == std::string::npos ? 0 : last_nl + 1;
    if (keep != content.size()) {
      spdlog::warn("{}: dropping torn final line before resuming", path.string());
      fs::resize_file(path, keep);
    }
    auto file = load_traces(path);
    const auto& h = file.header;
    if (h.config != header.config || h.corpus_hash != header.corpus_hash || h.run_seed != header.run_seed ||
        h.issues_selected != header.issues_selected) {
      throw Error(Errc::config_error, path.string() + " was written with a different configuration or corpus");
    }
    for (const auto& r : file.records) recorded_.insert(r.problem_id);
    out_.open(path, std::ios::binary | std::ios::app);
  } else {
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    out_.open(path, std::ios::binary | std::ios::trunc);
    out_ << to_json(header).dump() << '\n';
    out_.flush();
  }
  if (!out_) throw Error(Errc::io_error, "cannot open " + path.string() + " for writing");
}

void TraceWriter::append(const RunRecord& record) {
  if (!known_ids_.empty() && !known_ids_.count(record.problem_id)) {
    throw Error(Errc::validation_error, "problem id '" + record.problem_id + "' is not in the corpus");
  }
  const std::string line = to_json(record).dump() + "\n";
  std::lock_guard lock(mutex_);
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw Error(Errc::io_error, "write to " + path_.string() + " failed");
}

}  // namespace qrefine
