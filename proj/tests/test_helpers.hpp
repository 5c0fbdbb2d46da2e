#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrefine/model.hpp"
#include "qrefine/rank_kernels.hpp"

namespace qrefine::testing {

inline std::filesystem::path source_dir() { return QREFINE_SOURCE_DIR; }
inline std::filesystem::path fixtures() { return source_dir() / "tests" / "fixtures"; }
inline std::filesystem::path fixture_corpus() { return source_dir() / "corpus" / "fixture"; }

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

inline Issue pylint_issue(std::string code, int line, std::string message = "message", int end_line = 0) {
  return make_issue(Tool::pylint, std::move(code), Severity::flat(scored_category(code)), std::move(message), line,
                    end_line ? end_line : line);
}

inline Issue bandit_issue(std::string code, Severity severity, int line, std::string message = "finding") {
  return make_issue(Tool::bandit, std::move(code), severity, std::move(message), line, line);
}

// Brute-force Spearman: rank by counting smaller and equal values, then
// Pearson from raw sums.
inline double oracle_spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0;
      double equal = 0;
      for (double w : v) {
        if (w < v[i]) less += 1;
        if (w == v[i]) equal += 1;
      }
      r[i] = less + (equal + 1) / 2;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += rx[i];
    sy += ry[i];
    sxx += static_cast<long double>(rx[i]) * rx[i];
    syy += static_cast<long double>(ry[i]) * ry[i];
    sxy += static_cast<long double>(rx[i]) * ry[i];
  }
  const long double cov = sxy - sx * sy / n;
  const long double vx = sxx - sx * sx / n;
  const long double vy = syy - sy * sy / n;
  return static_cast<double>(cov / std::sqrt(vx * vy));
}

}  // namespace qrefine::testing
