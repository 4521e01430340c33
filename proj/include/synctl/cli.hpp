#pragma once

#include <iosfwd>
#include <string>

#include "synctl/config.hpp"

namespace synctl {

inline constexpr const char* kVersion = "0.1.0";

/// Executes a validated scenario; returns 0 on success or 3 when a verify /
/// geodesic-check property fails. Throws on runtime failures.
int run_scenario(const ScenarioConfig& cfg, std::ostream& log);

/// Full CLI semantics: loads the config, runs, and maps errors to exit codes
/// (0 success, 2 validation, 3 failed verification property, 1 other runtime
/// failure). Never throws.
int run(const std::string& config_path, Mode mode, const CliOverrides& overrides, std::ostream& log);

}  // namespace synctl
