#pragma once

// Per-problem results of the refinement loop.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrefine/model.hpp"
#include "qrefine/prompts.hpp"

namespace qrefine {

struct IterationTrace {
  int iteration_index = 0;
  std::vector<Issue> selected;
  std::string prompt_hash;
  // Empty when the iteration failed before a proposal was evaluated.
  std::string proposal_code_hash;
  std::vector<Issue> proposal_issues;
  TestVerdict proposal_verdict;
  FitnessScore proposal_fitness;
  bool accepted = false;
  FitnessScore current_fitness_after;
  std::optional<std::string> error;

  bool has_proposal() const { return !error.has_value(); }

  friend bool operator==(const IterationTrace&, const IterationTrace&) = default;
};

enum class RunStatus { completed, aborted };

std::string_view to_string(RunStatus status);
RunStatus parse_run_status(std::string_view text);

struct RunRecord {
  std::string problem_id;
  RunStatus status = RunStatus::completed;
  std::optional<std::string> error;
  bool tested = false;
  SignatureSpec signature;
  std::optional<Candidate> initial;
  std::optional<Candidate> final_candidate;
  std::vector<IterationTrace> traces;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

// Checks the loop invariants of a completed record: monotone current
// fitness, consistent accept flags, final fitness matching the last step.
void validate(const RunRecord& record, int max_iterations);

nlohmann::json to_json(const IterationTrace& trace);
IterationTrace iteration_trace_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunRecord& record);
RunRecord run_record_from_json(const nlohmann::json& j);

}  // namespace qrefine
