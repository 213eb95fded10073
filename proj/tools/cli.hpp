#pragma once

#include "burrsim/core/errors.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace burrsim::cli {

enum ExitCode : int {
    kOk = 0,
    kGeneric = 1,
    kUsage = 2,
    kParse = 3,
    kUnsupported = 4,
    kTruncated = 5,
    kIo = 6,
    kCorruption = 7,
    kIncomplete = 8,
    kInsufficientData = 9,
    kDigestMismatch = 10,
    kValidation = 11,
    kState = 12,
    kNetwork = 13,
};

int exit_code(ErrorKind kind) noexcept;

// Runs one command line. Output goes to `out`, diagnostics to `err` as
// "error: class=<kind> code=<n> msg=<text>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace burrsim::cli
