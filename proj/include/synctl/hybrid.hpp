#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "synctl/sphere.hpp"

namespace synctl {

/// Data of a hybrid system (C, F, D, G) over flat state vectors. The flow set
/// is where jump_margin <= 0 and the jump set where jump_margin >= 0 (the
/// overlap at zero is resolved in favor of flowing, up to margin_tol).
///
/// flow_field is the time-dependent vector field; flow_step, when set,
/// replaces the built-in classic RK4 step (used e.g. for Lie-group stepping).
/// post_step_projection, when set, is applied after every accepted step
/// (manifold renormalization).
struct HybridSystemDef {
  std::function<Vector(double, const Vector&)> flow_field;
  std::function<double(double, const Vector&)> jump_margin;
  std::function<Vector(double, const Vector&)> jump_map;
  std::function<Vector(const Vector&)> post_step_projection;
  std::function<Vector(double, const Vector&, double)> flow_step;
};

struct SolverConfig {
  double step = 1e-3;        // fixed RK4 step [s]
  double event_tol = 1e-9;   // bisection width for jump-time location [s]
  double max_time = 100.0;   // [s]
  int max_jumps = 50;        // Zeno guard
  double margin_tol = 1e-9;  // flow-priority band around margin = 0
  int record_stride = 1;     // record every k-th accepted step; boundaries always recorded

  void validate() const;
};

struct Sample {
  double t;
  Vector state;
};

/// One interval of flowing at a fixed jump count.
struct Phase {
  int jump_index = 0;
  std::vector<Sample> samples;
};

/// A recorded hybrid solution on its hybrid time domain: t is non-decreasing
/// within and across phases, jump_index increments by exactly 1, and the first
/// sample of phase j+1 shares the t of the last sample of phase j.
struct HybridArc {
  std::vector<Phase> phases;

  const Sample& first() const { return phases.front().samples.front(); }
  const Sample& last() const { return phases.back().samples.back(); }
  int jump_count() const { return static_cast<int>(phases.size()) - 1; }
  std::size_t sample_count() const;

  /// Throws std::logic_error if the hybrid-time-domain invariants fail.
  void check_invariants() const;
};

/// Integrates the hybrid system from x0 at t = 0 until max_time or max_jumps.
/// If jump_margin(0, x0) >= 0 the jump map is applied first (jump at t = 0).
/// During flow, a margin crossing within a step is located by bisection with
/// re-integration from the last accepted state; the pre-jump state is recorded
/// as the phase's last sample.
///
/// Errors: ZenoSuspected if max_jumps is exhausted before 1% of max_time has
/// elapsed; NonFiniteState if any state component becomes non-finite.
HybridArc solve(const HybridSystemDef& sys, const Vector& x0, const SolverConfig& cfg);

/// Bisection for the first margin zero-crossing in (t_lo, t_hi], re-advancing
/// from (t_lo, state_lo) each trial with `advance(state, t, dt)`. Requires
/// margin(t_lo, state_lo) < 0 <= margin(t_hi, state_hi) (else NoBracket).
/// Returns the crossing time within tol and the state on the margin >= 0 side,
/// refined until |margin| <= margin_tol where bisection permits.
std::pair<double, Vector> event_locate(
    const std::function<Vector(const Vector&, double, double)>& advance,
    const std::function<double(double, const Vector&)>& margin, const Vector& state_lo,
    const Vector& state_hi, double t_lo, double t_hi, double tol, double margin_tol);

}  // namespace synctl
