#pragma once

#include <ostream>

namespace cpv::cli {

// Exit codes: 0 success, 1 operation failed, 2 usage error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace cpv::cli
