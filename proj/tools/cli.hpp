#pragma once

#include <ostream>

namespace turnpike::cli {

// Exit codes: 0 success, 1 analysis failure (assumption or bound violated), 2 bad input or I/O.
inline constexpr int kOk = 0;
inline constexpr int kAnalysisFailure = 1;
inline constexpr int kInputFailure = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace turnpike::cli
