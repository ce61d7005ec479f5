#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sparsefn::cli {

/// Exit codes: 0 success, 1 rejected input, 2 numerical failure.
int run(int argc, char** argv);
/// Same, with explicit streams; args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sparsefn::cli
