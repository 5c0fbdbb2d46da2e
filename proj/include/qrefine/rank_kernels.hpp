#pragma once

// Rank correlation and its permutation test. The permutation test has a
// serial reference and an OpenMP version with identical results; each
// permutation draws from its own derived seed.

#include <cstdint>
#include <span>
#include <vector>

namespace qrefine {

// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Throws Errc::degenerate_input for fewer than two points, mismatched
// lengths, or a constant vector.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

struct PermutationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
  // Permutations with |rho| at least the observed |rho|.
  std::size_t extreme = 0;
};

// Two-sided: p = (extreme + 1) / (permutations + 1).
PermutationResult permutation_test_serial(std::span<const double> x, std::span<const double> y,
                                          std::size_t permutations, std::uint64_t seed);
// threads = 0 uses the OpenMP default.
PermutationResult permutation_test_parallel(std::span<const double> x, std::span<const double> y,
                                            std::size_t permutations, std::uint64_t seed, int threads = 0);

}  // namespace qrefine
