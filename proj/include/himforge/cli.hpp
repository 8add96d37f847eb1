#pragma once

// Command-line front end. `run` is the whole tool; the executable is a thin
// wrapper so tests can drive subcommands in-process.

#include <iosfwd>
#include <string>
#include <vector>

namespace himforge::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline constexpr int kManifestVersion = 1;

/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Default worker count: HIMFORGE_WORKERS when it parses as a positive
/// integer, otherwise 1.
int default_workers();

}  // namespace himforge::cli
