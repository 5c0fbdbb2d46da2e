#include "qrefine/engine.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <exception>
#include <mutex>
#include <optional>

#include "qrefine/error.hpp"
#include "qrefine/hashing.hpp"
#include "qrefine/serialization.hpp"

namespace qrefine {

using nlohmann::json;

void LoopConfig::validate() const {
  if (max_iterations < 1) throw Error(Errc::config_error, "max-iterations must be at least 1");
  if (!(test_timeout_s > 0)) throw Error(Errc::config_error, "test timeout must be positive");
}

json to_json(const LoopConfig& config) {
  return json{{"max_iterations", config.max_iterations},
              {"issues_selected", config.selection.issues_selected.label()},
              {"run_seed", config.selection.seed},
              {"weights", weights_to_json(config.weights)},
              {"test_timeout_s", config.test_timeout_s}};
}

Candidate evaluate(const std::string& code, const Problem& problem, const LoopConfig& config,
                   const Services& services, Origin origin, int iteration_index) {
  std::vector<Issue> issues;
  try {
    issues = services.analyzer.analyze(code);
  } catch (const Error& e) {
    throw Error(Errc::candidate_evaluation_failed, e.what());
  }
  TestVerdict verdict;
  if (problem.tested()) {
    verdict = services.verdicts.run(problem, code, config.test_timeout_s);
    if (verdict.status == VerdictStatus::harness_error) {
      throw Error(Errc::candidate_evaluation_failed, "test harness error");
    }
  }
  return make_candidate(code, std::move(issues), std::move(verdict), config.weights, origin, iteration_index);
}

SignatureSpec resolve_signature(const Problem& problem, const Services& services) {
  if (!problem.required_signatures.empty() || !problem.tested()) {
    return SignatureSpec{problem.required_signatures, SignatureSpec::Source::dataset};
  }
  const auto reply = services.provider.complete(build_signature_prompt(problem, services.templates));
  return parse_signature_reply(reply);
}

std::string initial_code(const Problem& problem, const SignatureSpec& signature, const Services& services) {
  if (problem.initial_code) return *problem.initial_code;
  const auto reply = services.provider.complete(build_initial_prompt(problem, signature, services.templates));
  return extract_code(reply);
}

RunRecord aborted_record(const std::string& problem_id, bool tested, const std::string& error) {
  RunRecord record;
  record.problem_id = problem_id;
  record.status = RunStatus::aborted;
  record.tested = tested;
  record.error = error;
  return record;
}

namespace {

// Drops the test duration from a recorded candidate.
Candidate without_timing(Candidate c) {
  c.verdict.duration_s = 0.0;
  return c;
}

}  // namespace

RunRecord refine(const Problem& problem, const LoopConfig& config, const Services& services) {
  RunRecord record;
  record.problem_id = problem.id;
  record.tested = problem.tested();
  Candidate current;
  try {
    record.signature = resolve_signature(problem, services);
    const auto code = initial_code(problem, record.signature, services);
    current = evaluate(code, problem, config, services, Origin::initial, 0);
  } catch (const std::exception& e) {
    return aborted_record(problem.id, problem.tested(), std::string("aborted-run: ") + e.what());
  }
  record.initial = without_timing(current);

  for (int i = 0; i < config.max_iterations && !current.fitness.perfect(); ++i) {
    IterationTrace step;
    step.iteration_index = i;
    try {
      if (!current.issues.empty()) {
        SelectionConfig selection{config.selection.issues_selected,
                                  derive_seed(config.selection.seed, problem.id, static_cast<std::uint64_t>(i))};
        step.selected = select_issues(current.issues, selection, config.weights);
      }
      const auto bundle = build_repair_prompt(current, step.selected, record.signature, current.verdict,
                                              services.templates);
      step.prompt_hash = prompt_hash(bundle);
      const auto reply = services.provider.complete(bundle);
      std::vector<std::string> descriptions;
      for (const auto& issue : step.selected) descriptions.push_back(issue_description(issue));
      const auto code = extract_code(reply, descriptions);
      auto proposal = without_timing(evaluate(code, problem, config, services, Origin::mutation, i + 1));
      step.proposal_code_hash = sha256_hex(code);
      step.proposal_issues = proposal.issues;
      step.proposal_verdict = proposal.verdict;
      step.proposal_fitness = proposal.fitness;
      step.accepted = accepts(proposal.fitness, current.fitness);
      if (step.accepted) current = std::move(proposal);
    } catch (const Error& e) {
      step.error = e.what();
      step.accepted = false;
      spdlog::debug("{}: iteration {} failed: {}", problem.id, i, e.what());
    }
    step.current_fitness_after = current.fitness;
    record.traces.push_back(std::move(step));
  }
  record.final_candidate = without_timing(current);
  return record;
}

namespace {

std::string progress_summary(const RunRecord& r) {
  if (r.status == RunStatus::aborted) return "aborted (" + r.error.value_or("") + ")";
  const auto& a = r.initial->fitness;
  const auto& b = r.final_candidate->fitness;
  return "delta " + std::to_string(a.total_severity) + " -> " + std::to_string(b.total_severity) + ", tests " +
         (a.tests_pass ? "pass" : "fail") + " -> " + (b.tests_pass ? "pass" : "fail") + ", " +
         std::to_string(r.traces.size()) + " iterations";
}

}  // namespace

std::vector<RunRecord> run_corpus(const std::vector<Problem>& problems, const LoopConfig& config,
                                  const Services& services, const CorpusRunOptions& options) {
  config.validate();
  if (options.parallelism < 1) throw Error(Errc::config_error, "parallelism must be at least 1");

  struct Job {
    std::string id;
    const Problem* problem = nullptr;
    std::optional<RunRecord> result;
  };
  std::vector<Job> jobs;
  for (const auto& p : problems) {
    if (!options.skip.count(p.id)) jobs.push_back({p.id, &p, std::nullopt});
  }
  for (const auto& r : options.preset) {
    if (!options.skip.count(r.problem_id)) jobs.push_back({r.problem_id, nullptr, r});
  }
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) { return a.id < b.id; });

  std::mutex mutex;
  std::size_t next_flush = 0;
  std::size_t finished = 0;
  std::exception_ptr write_failure;
  auto flush_ready = [&] {
    while (next_flush < jobs.size() && jobs[next_flush].result) {
      if (options.writer && !write_failure) {
        try {
          options.writer->append(*jobs[next_flush].result);
        } catch (...) {
          write_failure = std::current_exception();
        }
      }
      ++next_flush;
    }
  };
  {
    std::lock_guard lock(mutex);
    flush_ready();
  }

  const long count = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(options.parallelism)
  for (long k = 0; k < count; ++k) {
    Job& job = jobs[static_cast<std::size_t>(k)];
    if (!job.problem) continue;
    if (options.cancel && options.cancel->load()) continue;
    RunRecord record;
    try {
      record = refine(*job.problem, config, services);
    } catch (const std::exception& e) {
      record = aborted_record(job.id, job.problem->tested(), std::string("aborted-run: ") + e.what());
    }
    std::lock_guard lock(mutex);
    ++finished;
    spdlog::info("[{}/{}] {}: {}", finished, count, job.id, progress_summary(record));
    job.result = std::move(record);
    flush_ready();
  }

  // After an interrupt, completed records past a gap are still written.
  for (; next_flush < jobs.size(); ++next_flush) {
    if (jobs[next_flush].result && options.writer && !write_failure) {
      try {
        options.writer->append(*jobs[next_flush].result);
      } catch (...) {
        write_failure = std::current_exception();
      }
    }
  }
  if (write_failure) std::rethrow_exception(write_failure);

  std::vector<RunRecord> records;
  for (auto& job : jobs) {
    if (job.result) records.push_back(std::move(*job.result));
  }
  return records;
}

}  // namespace qrefine
