#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ddsrecon::cli {

/// Exit statuses: 0 success, 1 query unsatisfiable / no witness found,
/// 2 input error, 3 internal invariant violation.
inline constexpr int kOk = 0;
inline constexpr int kNoResult = 1;
inline constexpr int kInputError = 2;
inline constexpr int kInternalError = 3;

/// Runs one command. Machine-readable results go to `out`, diagnostics to
/// `err`. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace ddsrecon::cli
