#pragma once

// The mutate/evaluate/accept loop, per problem and over a corpus.

#include <atomic>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrefine/analyzers.hpp"
#include "qrefine/llm.hpp"
#include "qrefine/problem.hpp"
#include "qrefine/prompts.hpp"
#include "qrefine/record.hpp"
#include "qrefine/selection.hpp"
#include "qrefine/trace.hpp"
#include "qrefine/verdicts.hpp"

namespace qrefine {

struct LoopConfig {
  int max_iterations = 10;
  // selection.seed is the run seed; each iteration draws with
  // derive_seed(run seed, problem id, iteration).
  SelectionConfig selection;
  WeightTable weights = WeightTable::defaults();
  double test_timeout_s = 30.0;

  void validate() const;
};

nlohmann::json to_json(const LoopConfig& config);

struct Services {
  const Analyzer& analyzer;
  const VerdictProvider& verdicts;
  CompletionProvider& provider;
  const PromptTemplates& templates;
};

// Throws Errc::candidate_evaluation_failed when analysis is incomplete or
// the test harness fails.
Candidate evaluate(const std::string& code, const Problem& problem, const LoopConfig& config,
                   const Services& services, Origin origin, int iteration_index);

// Required names and starting code, produced before the loop.
SignatureSpec resolve_signature(const Problem& problem, const Services& services);
std::string initial_code(const Problem& problem, const SignatureSpec& signature, const Services& services);

// Never throws for problem-level failures; those produce an aborted record.
RunRecord refine(const Problem& problem, const LoopConfig& config, const Services& services);

RunRecord aborted_record(const std::string& problem_id, bool tested, const std::string& error);

struct CorpusRunOptions {
  int parallelism = 1;
  // Problems with these ids are not run (already in the trace).
  std::set<std::string> skip;
  // Extra entries (e.g. unparseable corpus entries) recorded as aborted runs.
  std::vector<RunRecord> preset;
  TraceWriter* writer = nullptr;
  // Checked before each problem starts; set by the interrupt handler.
  const std::atomic<bool>* cancel = nullptr;
};

// Runs every problem not in options.skip, up to `parallelism` at a time.
// Records are appended to the writer in problem-id order as soon as all
// earlier ids are done; the returned list is id-ordered.
std::vector<RunRecord> run_corpus(const std::vector<Problem>& problems, const LoopConfig& config,
                                  const Services& services, const CorpusRunOptions& options);

}  // namespace qrefine
