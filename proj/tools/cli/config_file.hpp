#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <gram/synth.hpp>
#include <gram/train.hpp>

namespace gram::cli {

struct RunConfig {
  SyntheticSpec data;
  TrainConfig train;
};

// Parses `key = value` lines; `#` starts a comment. `seed` seeds both the
// generator and training. Unknown keys, malformed values and invalid
// settings throw CliError with exit code kConfigError.
RunConfig parse_config(std::istream& in, const std::string& source);
RunConfig load_config(const std::filesystem::path& path);

// Re-checks both halves after command-line overrides.
void validate(const RunConfig& config);

}  // namespace gram::cli
