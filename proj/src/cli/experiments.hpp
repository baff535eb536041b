#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace wndyn::cli {

struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;  ///< overrides the config seed
  std::string out_dir = ".";
};

/// Execute the experiment described by the config file.  Returns the process
/// exit code; on failure a machine-readable {"error": {...}} JSON object is
/// printed to stdout.
int run_command(const CliOptions& opts);

/// Parse and schema-check the config without running it.
int validate_command(const CliOptions& opts);

/// Check the worker-cap environment variable (WNDYN_MAX_WORKERS); returns an
/// error message for invalid values, empty string otherwise.
std::string check_worker_env();

}  // namespace wndyn::cli
