#include "qrefine/record.hpp"

#include "qrefine/error.hpp"
#include "qrefine/serialization.hpp"

namespace qrefine {

using nlohmann::json;

std::string_view to_string(RunStatus status) {
  return status == RunStatus::completed ? "completed" : "aborted";
}

RunStatus parse_run_status(std::string_view text) {
  if (text == "completed") return RunStatus::completed;
  if (text == "aborted") return RunStatus::aborted;
  throw Error(Errc::parse_error, "unknown run status '" + std::string(text) + "'");
}

void validate(const RunRecord& record, int max_iterations) {
  auto fail = [&](const std::string& what) {
    throw Error(Errc::validation_error, record.problem_id + ": " + what);
  };
  if (record.status == RunStatus::aborted) {
    if (!record.traces.empty()) fail("aborted run carries iterations");
    return;
  }
  if (!record.initial || !record.final_candidate) fail("completed run without initial and final candidates");
  if (static_cast<int>(record.traces.size()) > max_iterations) fail("more iterations than the cap");
  FitnessScore current = record.initial->fitness;
  for (std::size_t i = 0; i < record.traces.size(); ++i) {
    const auto& t = record.traces[i];
    if (current.perfect()) fail("iteration " + std::to_string(i) + " ran on a perfect candidate");
    if (t.iteration_index != static_cast<int>(i)) fail("iteration indices out of sequence");
    const bool expected = t.has_proposal() && accepts(t.proposal_fitness, current);
    if (t.accepted != expected) fail("accept flag disagrees with the fitness order at iteration " + std::to_string(i));
    const FitnessScore after = t.accepted ? t.proposal_fitness : current;
    if (t.current_fitness_after != after) fail("current fitness inconsistent at iteration " + std::to_string(i));
    if (after < current) fail("current fitness decreased at iteration " + std::to_string(i));
    current = after;
  }
  if (record.final_candidate->fitness != current) fail("final fitness differs from the last current fitness");
  if (record.final_candidate->fitness < record.initial->fitness) fail("final fitness below initial fitness");
  const bool capped = static_cast<int>(record.traces.size()) == max_iterations;
  if (!capped && !current.perfect()) fail("stopped before the cap without reaching a perfect score");
}

json to_json(const IterationTrace& t) {
  json j{{"iteration_index", t.iteration_index},
         {"selected", t.selected},
         {"prompt_hash", t.prompt_hash},
         {"accepted", t.accepted},
         {"current_fitness_after", t.current_fitness_after}};
  if (t.error) {
    j["error"] = *t.error;
  } else {
    j["proposal_code_hash"] = t.proposal_code_hash;
    j["proposal_issues"] = t.proposal_issues;
    j["proposal_verdict"] = verdict_to_json(t.proposal_verdict, false);
    j["proposal_fitness"] = t.proposal_fitness;
  }
  return j;
}

IterationTrace iteration_trace_from_json(const json& j) {
  IterationTrace t;
  t.iteration_index = j.at("iteration_index").get<int>();
  t.selected = j.at("selected").get<std::vector<Issue>>();
  t.prompt_hash = j.at("prompt_hash").get<std::string>();
  t.accepted = j.at("accepted").get<bool>();
  t.current_fitness_after = j.at("current_fitness_after").get<FitnessScore>();
  if (j.contains("error")) {
    t.error = j.at("error").get<std::string>();
  } else {
    t.proposal_code_hash = j.at("proposal_code_hash").get<std::string>();
    t.proposal_issues = j.at("proposal_issues").get<std::vector<Issue>>();
    t.proposal_verdict = j.at("proposal_verdict").get<TestVerdict>();
    t.proposal_fitness = j.at("proposal_fitness").get<FitnessScore>();
  }
  return t;
}

json to_json(const RunRecord& r) {
  json j{{"problem_id", r.problem_id},
         {"status", to_string(r.status)},
         {"tested", r.tested},
         {"signature",
          {{"required_names", r.signature.required_names},
           {"source", r.signature.source == SignatureSpec::Source::dataset ? "dataset" : "inferred"}}}};
  if (r.error) j["error"] = *r.error;
  if (r.initial) j["initial"] = *r.initial;
  if (r.final_candidate) j["final"] = *r.final_candidate;
  json traces = json::array();
  for (const auto& t : r.traces) traces.push_back(to_json(t));
  j["iterations"] = std::move(traces);
  return j;
}

RunRecord run_record_from_json(const json& j) {
  try {
    RunRecord r;
    r.problem_id = j.at("problem_id").get<std::string>();
    r.status = parse_run_status(j.at("status").get<std::string>());
    r.tested = j.at("tested").get<bool>();
    const auto& sig = j.at("signature");
    r.signature.required_names = sig.at("required_names").get<std::vector<std::string>>();
    const auto source = sig.at("source").get<std::string>();
    if (source != "dataset" && source != "inferred") throw Error(Errc::parse_error, "unknown signature source");
    r.signature.source = source == "dataset" ? SignatureSpec::Source::dataset : SignatureSpec::Source::inferred;
    if (j.contains("error")) r.error = j.at("error").get<std::string>();
    if (j.contains("initial")) r.initial = j.at("initial").get<Candidate>();
    if (j.contains("final")) r.final_candidate = j.at("final").get<Candidate>();
    for (const auto& t : j.at("iterations")) r.traces.push_back(iteration_trace_from_json(t));
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed run record: ") + e.what());
  }
}

}  // namespace qrefine
