#pragma once

// JSON mapping of the core model, shared by trace files, reports and the CLI.

#include <json.hpp>

#include "qrefine/model.hpp"

namespace qrefine {

void to_json(nlohmann::json& j, const Issue& issue);
void from_json(const nlohmann::json& j, Issue& issue);

void to_json(nlohmann::json& j, const TestFailure& failure);
void from_json(const nlohmann::json& j, TestFailure& failure);

// Durations are timing data and are only written when include_duration is set.
nlohmann::json verdict_to_json(const TestVerdict& verdict, bool include_duration);
void to_json(nlohmann::json& j, const TestVerdict& verdict);
void from_json(const nlohmann::json& j, TestVerdict& verdict);

void to_json(nlohmann::json& j, const FitnessScore& score);
void from_json(const nlohmann::json& j, FitnessScore& score);

void to_json(nlohmann::json& j, const Candidate& candidate);
void from_json(const nlohmann::json& j, Candidate& candidate);

// {"security": {"HIGH": 30, ...}, "C": 3, "E": 3, "W": 3, "R": 3}
nlohmann::json weights_to_json(const WeightTable& weights);
WeightTable weights_from_json(const nlohmann::json& j);

}  // namespace qrefine
