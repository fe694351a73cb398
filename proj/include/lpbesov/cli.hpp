#pragma once

// Batch command-line surface. Commands: decompose, verify-frame, besov,
// equivalence, diagnostics. Exit status: 0 ok, 2 invalid configuration,
// 3 numerical failure (a partial report with a failure record is written).

#include <ostream>
#include <span>
#include <string>

namespace lpbesov::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "LPBESOV_OUTPUT_DIR";

// args excludes the program name.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace lpbesov::cli
