#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dob::cli {

enum ExitCode : int {
    kOk = 0,
    kMalformed = 1,
    kNoDesign = 2,
    kConditionFailed = 3,
    kDiverged = 4,
};

/// Runs the `dob` command line. args excludes the program name. Data goes to
/// files or `out`, logs to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dob::cli
