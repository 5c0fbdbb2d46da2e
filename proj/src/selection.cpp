#include "qrefine/selection.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <numeric>

#include "qrefine/error.hpp"

namespace qrefine {

IssuesSelected IssuesSelected::count(std::size_t k) {
  if (k == 0) throw Error(Errc::invalid_argument, "issues-selected count must be at least 1");
  return IssuesSelected(k);
}

IssuesSelected IssuesSelected::parse(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "all") return all();
  std::size_t k = 0;
  const auto [ptr, ec] = std::from_chars(lower.data(), lower.data() + lower.size(), k);
  if (ec != std::errc() || ptr != lower.data() + lower.size() || k == 0) {
    throw Error(Errc::invalid_argument, "issues-selected must be 'all' or a positive integer, got '" +
                                            std::string(text) + "'");
  }
  return count(k);
}

std::size_t IssuesSelected::limit(std::size_t available) const {
  return count_ ? std::min(*count_, available) : available;
}

std::string IssuesSelected::label() const { return count_ ? std::to_string(*count_) : "All"; }

std::uint64_t Rng::below(std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::invalid_argument, "empty sampling range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  while (true) {
    const auto x = next();
    if (x < limit) return x % bound;
  }
}

double Rng::unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view problem_id, std::uint64_t iteration) {
  return mix64(mix64(run_seed ^ fnv1a64(problem_id)) + iteration);
}

std::vector<Issue> select_issues(std::span<const Issue> issues, const SelectionConfig& config,
                                 const WeightTable& weights) {
  if (issues.empty()) throw Error(Errc::empty_issue_list, "nothing to select from");
  const std::size_t wanted = config.issues_selected.limit(issues.size());

  std::vector<std::size_t> positive;
  std::vector<std::size_t> zero;
  std::vector<std::uint64_t> w(issues.size());
  for (std::size_t i = 0; i < issues.size(); ++i) {
    w[i] = static_cast<std::uint64_t>(weight(issues[i], weights));
    (w[i] > 0 ? positive : zero).push_back(i);
  }

  Rng rng(config.seed);
  std::vector<Issue> selected;
  selected.reserve(wanted);
  std::uint64_t total = std::accumulate(positive.begin(), positive.end(), std::uint64_t{0},
                                        [&](std::uint64_t s, std::size_t i) { return s + w[i]; });
  while (selected.size() < wanted && !positive.empty()) {
    std::uint64_t target = rng.below(total);
    std::size_t pick = 0;
    while (target >= w[positive[pick]]) {
      target -= w[positive[pick]];
      ++pick;
    }
    const std::size_t index = positive[pick];
    selected.push_back(issues[index]);
    total -= w[index];
    positive.erase(positive.begin() + static_cast<std::ptrdiff_t>(pick));
  }

  std::stable_sort(zero.begin(), zero.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(issues[a].line, issues[a].code) < std::tie(issues[b].line, issues[b].code);
  });
  for (std::size_t i = 0; selected.size() < wanted && i < zero.size(); ++i) {
    selected.push_back(issues[zero[i]]);
  }
  return selected;
}

}  // namespace qrefine
