#include "qrefine/rank_kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qrefine/error.hpp"
#include "qrefine/selection.hpp"

namespace qrefine {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

namespace {

struct Centered {
  std::vector<double> values;
  double sum_squares = 0.0;
};

Centered center(std::span<const double> v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  Centered c;
  c.values.reserve(v.size());
  for (double x : v) {
    c.values.push_back(x - mean);
    c.sum_squares += (x - mean) * (x - mean);
  }
  return c;
}

void check_shape(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::degenerate_input, "vectors differ in length");
  if (x.size() < 2) throw Error(Errc::degenerate_input, "need at least two observations");
}

double correlation(const Centered& cx, const Centered& cy) {
  if (cx.sum_squares == 0.0 || cy.sum_squares == 0.0) {
    throw Error(Errc::degenerate_input, "constant vector has no rank correlation");
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < cx.values.size(); ++i) dot += cx.values[i] * cy.values[i];
  return std::clamp(dot / std::sqrt(cx.sum_squares * cy.sum_squares), -1.0, 1.0);
}

struct Prepared {
  Centered x;
  Centered y;
  double rho = 0.0;
};

Prepared prepare(std::span<const double> x, std::span<const double> y) {
  check_shape(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  Prepared p{center(rx), center(ry), 0.0};
  p.rho = correlation(p.x, p.y);
  return p;
}

// |rho| of one seeded shuffle of y against x, compared with the observed value.
bool extreme_permutation(const Prepared& p, std::uint64_t seed, std::size_t index, std::vector<double>& scratch) {
  scratch = p.y.values;
  Rng rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(index) + 1)));
  for (std::size_t i = scratch.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(scratch[i - 1], scratch[j]);
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < scratch.size(); ++i) dot += p.x.values[i] * scratch[i];
  const double rho = dot / std::sqrt(p.x.sum_squares * p.y.sum_squares);
  return std::abs(rho) >= std::abs(p.rho) - 1e-12;
}

PermutationResult finish(const Prepared& p, std::size_t permutations, std::size_t extreme) {
  PermutationResult r;
  r.rho = p.rho;
  r.permutations = permutations;
  r.extreme = extreme;
  r.p_value = static_cast<double>(extreme + 1) / static_cast<double>(permutations + 1);
  return r;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
  check_shape(x, y);
  return correlation(center(x), center(y));
}

double spearman(std::span<const double> x, std::span<const double> y) { return prepare(x, y).rho; }

PermutationResult permutation_test_serial(std::span<const double> x, std::span<const double> y,
                                          std::size_t permutations, std::uint64_t seed) {
  const auto p = prepare(x, y);
  std::vector<double> scratch;
  std::size_t extreme = 0;
  for (std::size_t k = 0; k < permutations; ++k) {
    if (extreme_permutation(p, seed, k, scratch)) ++extreme;
  }
  return finish(p, permutations, extreme);
}

PermutationResult permutation_test_parallel(std::span<const double> x, std::span<const double> y,
                                            std::size_t permutations, std::uint64_t seed, int threads) {
  const auto p = prepare(x, y);
  const int team = threads > 0 ? threads : omp_get_max_threads();
  const long count = static_cast<long>(permutations);
  long extreme = 0;
#pragma omp parallel num_threads(team) reduction(+ : extreme)
  {
    std::vector<double> scratch;
#pragma omp for schedule(static)
    for (long k = 0; k < count; ++k) {
      if (extreme_permutation(p, seed, static_cast<std::size_t>(k), scratch)) ++extreme;
    }
  }
  return finish(p, permutations, static_cast<std::size_t>(extreme));
}

}  // namespace qrefine
