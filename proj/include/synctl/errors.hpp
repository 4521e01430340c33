#pragma once

#include <stdexcept>
#include <string>

namespace synctl {

// Error conditions named by the operation contracts. All derive from
// std::runtime_error so callers can catch broadly or by condition.

struct DegenerateGeodesic : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct TooFewSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutsideDomain : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LogicVarOutsideY : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotInFlowSet : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZenoSuspected : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteState : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoBracket : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotAJumpStart : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ZeroCommandedThrust : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotStabilizable : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised by config loading with a field-path prefix, e.g. "potential.delta: ...".
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace synctl
