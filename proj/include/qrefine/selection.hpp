#pragma once

// SelectIssue: which issues are surfaced to the model in one iteration.

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrefine/model.hpp"

namespace qrefine {

// Count(k) with k >= 1, or All.
class IssuesSelected {
 public:
  static IssuesSelected all() { return IssuesSelected(std::nullopt); }
  static IssuesSelected count(std::size_t k);
  // Accepts "all" (any case) or a positive integer.
  static IssuesSelected parse(std::string_view text);

  bool is_all() const { return !count_; }
  std::size_t limit(std::size_t available) const;
  // "All" or the decimal count.
  std::string label() const;

  friend bool operator==(const IssuesSelected&, const IssuesSelected&) = default;

 private:
  explicit IssuesSelected(std::optional<std::size_t> k) : count_(k) {}
  std::optional<std::size_t> count_;
};

struct SelectionConfig {
  IssuesSelected issues_selected = IssuesSelected::count(5);
  std::uint64_t seed = 0;
};

// Deterministic 64-bit generator wrapper with platform-independent draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform integer in [0, bound), bound > 0, without modulo bias.
  std::uint64_t below(std::uint64_t bound);
  // Uniform double in [0, 1) with 53 random bits.
  double unit();

 private:
  std::mt19937_64 engine_;
};

std::uint64_t mix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);
// Per-iteration selection seed for one problem of a run.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view problem_id, std::uint64_t iteration);

// Sequential weighted sampling without replacement; each draw picks among the
// remaining positive-weight issues with probability proportional to weight.
// Zero-weight issues follow in (line, code) order. Output is in draw order.
std::vector<Issue> select_issues(std::span<const Issue> issues, const SelectionConfig& config,
                                 const WeightTable& weights);

}  // namespace qrefine
