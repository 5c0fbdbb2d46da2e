#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qrefine::cli {

inline constexpr int kExitPerfect = 0;
inline constexpr int kExitImperfect = 1;
inline constexpr int kExitInfrastructure = 2;

// Entry point for the `qrefine` binary; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qrefine::cli
