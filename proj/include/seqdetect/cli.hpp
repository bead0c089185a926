#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace seqdetect::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kData = 2,
    kNumeric = 3,
};

/// Entry point for `seqdetect <train|calibrate|detect|simulate> [flags]`.
/// Documents that are not written to --output go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace seqdetect::cli
