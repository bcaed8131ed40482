#pragma once

#include <stdexcept>
#include <string>

namespace gram::cli {

// Process exit codes. Stable: scripts may depend on them.
enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kParseError = 2,
  kMissingId = 3,
  kUnknownAnchor = 4,
  kConfigError = 5,
  kDiverged = 6,
};

class CliError : public std::runtime_error {
 public:
  CliError(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

}  // namespace gram::cli
