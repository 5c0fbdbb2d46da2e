#pragma once

#include <optional>
#include <string>
#include <vector>

namespace qrefine {

// One benchmark task.
struct Problem {
  std::string id;
  std::string task_prompt;
  std::optional<std::string> test_suite;
  std::vector<std::string> required_signatures;
  std::string module_name;
  // Code to start refining from; generated from the task when absent.
  std::optional<std::string> initial_code;

  bool tested() const { return test_suite.has_value(); }

  friend bool operator==(const Problem&, const Problem&) = default;
};

}  // namespace qrefine
