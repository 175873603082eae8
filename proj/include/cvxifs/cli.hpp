#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cvxifs::cli {

// Runs one CLI invocation (args exclude the program name) writing to the
// given streams.  Exit codes: 0 success, 2 malformed configuration or bad
// invocation, 3 non-convergence, 4 contraction-inequality counterexample
// found by `validate`, 1 anything else.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cvxifs::cli
