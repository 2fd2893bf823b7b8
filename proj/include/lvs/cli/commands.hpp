#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lvs::cli {

// Exit status: 0 success, 1 runtime failure, 2 usage or validation error.
inline constexpr int k_exit_ok = 0;
inline constexpr int k_exit_runtime = 1;
inline constexpr int k_exit_usage = 2;

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

// args excludes the program name.
int run(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

}  // namespace lvs::cli
