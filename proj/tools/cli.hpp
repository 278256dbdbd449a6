// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>

namespace ihs::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Parses argv and runs one subcommand. Errors go to `err` as a single
/// "error: <kind>: <message>" line.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(int argc, const char* const* argv);

}  // namespace ihs::cli
