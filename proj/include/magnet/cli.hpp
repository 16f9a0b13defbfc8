#pragma once

#include <iosfwd>

namespace magnet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

inline constexpr const char* kReportSchema = "magnet-report/1";

/// Parses argv and runs one subcommand (estimate, path, stability, screen,
/// interpret, simulate, bench, theory). Usage text and results go to `out`;
/// failures print a JSON object {"error": {...}} on `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

const char* version();

}  // namespace magnet::cli
