// Command-line front end for the mvbayes library.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data,
// estimation or infeasibility error.

#pragma once

#include <iosfwd>

namespace mvbayes::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsageError = 1;
inline constexpr int kDataError = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mvbayes::cli
