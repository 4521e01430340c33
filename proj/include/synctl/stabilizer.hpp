#pragma once

#include <span>
#include <utility>
#include <vector>

#include "synctl/exec.hpp"
#include "synctl/hybrid.hpp"
#include "synctl/potential.hpp"
#include "synctl/sphere.hpp"

namespace synctl {

/// State of the closed loop on S^n: plant state x and logic variable y in Y.
struct ClosedLoopState {
  UnitVector x;
  UnitVector y;
};

/// Hybrid controller output during flow, omega = -grad V^y(x). Throws
/// NotInFlowSet when mu(x, y) > delta + margin_tol.
Vector controller_output(const PotentialConfig& cfg, const ClosedLoopState& s,
                         double margin_tol = 1e-9);

/// mu(x, y) >= delta.
bool should_jump(const PotentialConfig& cfg, const ClosedLoopState& s);

/// (x, argmin over Y of V(x, .)); the post-jump synergy gap is 0.
ClosedLoopState jump_update(const PotentialConfig& cfg, const ClosedLoopState& s);

Vector pack_loop_state(const ClosedLoopState& s);
ClosedLoopState unpack_loop_state(const Vector& packed);

/// The closed-loop hybrid system on the packed state [x; y]: flow
/// xdot = -P(x) grad V^y(x), ydot = 0; jump margin mu - delta; jump map
/// y+ = argmin; post-step renormalization of x.
HybridSystemDef sphere_loop_system(const PotentialConfig& cfg);

/// Runs the closed loop from (x0, y0). y0 must lie in Y.
HybridArc simulate(const PotentialConfig& cfg, const UnitVector& x0, const UnitVector& y0,
                   const SolverConfig& solver);

/// Independent solves, optionally in parallel (one engine instance each).
std::vector<HybridArc> simulate_batch(const PotentialConfig& cfg,
                                      std::span<const std::pair<UnitVector, UnitVector>> initial,
                                      const SolverConfig& solver, Exec exec = Exec::parallel);

struct DecayReport {
  bool vacuous = false;       // V(0,0) at machine zero; all checks hold trivially
  double lambda_emp = 0.0;    // least-squares rate of log V(t); NaN when vacuous
  double lambda_bound = 0.0;  // lambda from ExpConstants
  bool envelope_ok = false;   // V(t,j) <= V(0,0) exp(-(lambda - 1e-6) t)
  bool distance_bound_ok = false;
  bool flow_monotone = false;  // V non-increasing within phases (tol 1e-9)
  double min_jump_drop = 0.0;  // min over jumps of V- - V+; +inf when no jumps
  double final_distance = 0.0;
};

DecayReport check_exponential_decay(const HybridArc& arc, const PotentialConfig& cfg,
                                    const ExpConstants& constants);
DecayReport check_exponential_decay(const HybridArc& arc, const PotentialConfig& cfg);

struct GeodesicReport {
  double path_len = 0.0;
  double geodesic_dist = 0.0;
  double abs_diff = 0.0;
};

/// Compares the arc's x-path length with arccos(x0^T r). Requires an arc that
/// started in the jump set (single-sample phase 0 at t = 0); otherwise throws
/// NotAJumpStart.
GeodesicReport check_geodesic(const HybridArc& arc, const PotentialConfig& cfg);

}  // namespace synctl
