#pragma once

#include <exception>
#include <ostream>

namespace deepssm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitNumeric = 4;

/// Maps a library exception to the process exit code.
int exit_code_for(const std::exception& e);

/// Runs one command line. Never throws; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace deepssm::cli
