#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vrpseg {

inline constexpr const char* kCliVersion = "0.1.0";

/// Full command-line driver with injectable streams. `args` excludes the
/// program name. Returns the process exit code: 0 ok, 2 config/usage error,
/// 3 data error, 4 diverged training.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace vrpseg
