#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qrefine {

struct ProcessOptions {
  std::vector<std::string> argv;
  std::string stdin_data;
  std::chrono::milliseconds timeout{std::chrono::seconds(60)};
  // When set, the child sees exactly these KEY=VALUE entries.
  std::optional<std::vector<std::string>> environment;
  std::filesystem::path working_directory;
};

struct ProcessResult {
  int exit_code = -1;
  bool timed_out = false;
  bool signaled = false;
  std::string stdout_data;
  std::string stderr_data;
  double duration_s = 0.0;
};

// Runs argv[0] (resolved through PATH) in its own process group. On timeout
// the whole group is killed and timed_out is set. Throws Errc::tool_not_found
// when the executable cannot be started.
ProcessResult run_process(const ProcessOptions& options);

std::optional<std::filesystem::path> find_executable(std::string_view name);

// Fresh private directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(std::string_view prefix = "qrefine");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace qrefine
