#pragma once

#include <iosfwd>

namespace vmmix::cli {

// Exit status: 0 ok, 1 usage error, 2 data error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vmmix::cli
