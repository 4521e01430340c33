#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "synctl/exec.hpp"
#include "synctl/hybrid.hpp"
#include "synctl/potential.hpp"
#include "synctl/quad.hpp"

namespace synctl {

enum class Mode { sphere_sim, quad_sim, gains, verify, geodesic_check };

std::string mode_name(Mode mode);
std::optional<Mode> mode_from_name(const std::string& name);

/// A fully validated scenario. Invalid documents raise ValidationError with a
/// field-path message ("potential.delta: ...").
struct ScenarioConfig {
  Mode mode = Mode::verify;
  std::optional<PotentialConfig> potential;
  SolverConfig solver;

  QuadParams quad_params;
  CircleReference reference;
  SatConfig sat;
  Matrix6 H;
  Matrix6 Qhat0;
  Eigen::Matrix3d Rhat;
  double kbar1 = 12.0;
  double kp = 1.0;
  double k1 = 1.0;

  std::optional<UnitVector> x0;  // sphere modes
  std::optional<UnitVector> y0;
  std::optional<QuadFullState> quad_initial;  // quad-sim; defaults to the upside-down scenario

  long long samples = 1'000'000;
  std::uint64_t seed = 0;
  std::string output;
  Exec exec = Exec::parallel;

  nlohmann::json echo;  // the original document, for output metadata

  const PotentialConfig& potential_cfg() const { return *potential; }
};

struct CliOverrides {
  std::optional<std::string> output;
  std::optional<std::uint64_t> seed;
};

/// Parses and validates a config document for the given mode.
ScenarioConfig load_config_json(const nlohmann::json& doc, Mode mode, const CliOverrides& overrides = {});
ScenarioConfig load_config(const std::string& path, Mode mode, const CliOverrides& overrides = {});

}  // namespace synctl
