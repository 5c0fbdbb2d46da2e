#include <doctest.h>

#include <cmath>
#include <random>

#include "qrefine/error.hpp"
#include "qrefine/rank_kernels.hpp"
#include "test_helpers.hpp"

using namespace qrefine;

namespace {

std::vector<double> tied_values(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> small(0, 5);
  std::vector<double> v(n);
  for (auto& x : v) x = small(rng);
  return v;
}

}  // namespace

TEST_CASE("average ranks share tied positions") {
  const std::vector<double> v{10, 20, 10, 30, 20, 20};
  CHECK(average_ranks(v) == std::vector<double>{1.5, 4, 1.5, 6, 4, 4});
  CHECK(average_ranks(std::vector<double>{}).empty());
}

TEST_CASE("spearman agrees with the brute-force oracle") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    auto x = tied_values(rng, n);
    auto y = tied_values(rng, n);
    x[0] = 0;
    x[1] = 9;
    y[0] = 0;
    y[1] = 9;
    CHECK(std::abs(spearman(x, y) - testing::oracle_spearman(x, y)) <= 1e-12);
  }
}

TEST_CASE("perfect orderings give exactly plus or minus one") {
  const std::vector<double> a{1, 2, 3};
  const std::vector<double> b{3, 2, 1};
  CHECK(spearman(a, b) == -1.0);
  CHECK(spearman(a, a) == 1.0);
  CHECK(pearson(a, b) == -1.0);
}

TEST_CASE("degenerate inputs are rejected") {
  auto code_of = [](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return Errc::io_error;
  };
  const std::vector<double> one{1};
  const std::vector<double> flat{2, 2, 2};
  const std::vector<double> three{1, 2, 3};
  const std::vector<double> two{1, 2};
  CHECK(code_of([&] { spearman(one, one); }) == Errc::degenerate_input);
  CHECK(code_of([&] { spearman(flat, three); }) == Errc::degenerate_input);
  CHECK(code_of([&] { spearman(three, two); }) == Errc::degenerate_input);
  CHECK(code_of([&] { permutation_test_serial(flat, three, 10, 0); }) == Errc::degenerate_input);
}

TEST_CASE("permutation test: serial and parallel agree exactly") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = tied_values(rng, 40);
    auto y = tied_values(rng, 40);
    x[0] = -1;
    y[0] = -1;
    const auto s = permutation_test_serial(x, y, 2000, 99 + trial);
    for (int threads : {1, 2, 4}) {
      const auto p = permutation_test_parallel(x, y, 2000, 99 + trial, threads);
      CHECK(p.rho == s.rho);
      CHECK(p.extreme == s.extreme);
      CHECK(p.p_value == s.p_value);
    }
    CHECK(s.permutations == 2000);
    CHECK(s.p_value == doctest::Approx((s.extreme + 1.0) / 2001.0));
    CHECK(s.rho == spearman(x, y));
  }
}

TEST_CASE("permutation p-values separate signal from noise") {
  std::vector<double> x(30);
  std::vector<double> y(30);
  for (std::size_t i = 0; i < 30; ++i) {
    x[i] = static_cast<double>(i);
    y[i] = static_cast<double>(i) + (i % 3 == 0 ? 2.0 : 0.0);
  }
  const auto strong = permutation_test_serial(x, y, 999, 3);
  CHECK(strong.p_value == doctest::Approx(1.0 / 1000.0));
  const auto same_seed = permutation_test_serial(x, y, 999, 3);
  CHECK(same_seed.extreme == strong.extreme);
}
