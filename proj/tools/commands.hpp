#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace minaffine::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,       // I/O or usage error
  kDegenerate = 2,  // validation or degeneracy failure
  kGapTooLarge = 3  // compare: solver/oracle gap above tolerance
};

/// Entry point shared by the executable and the tests. args excludes the
/// program name. Reports go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace minaffine::cli
