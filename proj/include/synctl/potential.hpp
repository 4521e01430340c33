#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "synctl/exec.hpp"
#include "synctl/sphere.hpp"

namespace synctl {

/// Parameters of the synergistic potential family
///   V(x, y) = (1 - r^T x) / (1 - r^T x + k (1 - y^T x))
/// with logic set Y = { y : r^T y <= gamma } and hysteresis gap delta.
struct PotentialConfig {
  PotentialConfig(UnitVector r, double k, double gamma, double delta);

  UnitVector r;
  double k;
  double gamma;
  double delta;

  /// min over x in Y of mu(x, x) = (1 + gamma) / (2/k + 1 + gamma); delta must
  /// lie strictly below this for the hysteresis to be admissible.
  double min_synergy_gap() const;

  /// Global bounds of the denominator 1 - r^T x + k (1 - y^T x) over S^n x Y:
  /// 1 + k -+ sqrt(1 + 2 k gamma + k^2).
  double denom_lo() const;
  double denom_hi() const;

  bool in_logic_set(const UnitVector& y, double tol = 1e-12) const;

  /// Fixed point on the boundary of Y used to resolve the set-valued argmin at
  /// x = r and r^T x = -1: gamma * r + sqrt(1 - gamma^2) * e, where e is the
  /// normalized projection of the first canonical axis not parallel to r.
  UnitVector boundary_tiebreak() const;
};

/// Exponential-stability constants of the family. alpha_low/alpha_up are the
/// closed forms; v_flow_max is the grid-plus-ascent estimate of max V over the
/// flow set {mu <= delta}; v_flow_max_bound is the analytic bound
/// delta + 2/(2 + k (1 + gamma)); lambda uses the grid estimate.
struct ExpConstants {
  double alpha_low;
  double alpha_up;
  double lambda;
  double v_flow_max;
  double v_flow_max_bound;
};

/// Grid used by the flow-set maximization inside exp_constants.
struct FlowSetGrid {
  int sphere_points = 20000;  // Fibonacci lattice on S^2; seeded uniform for general n
  int y_points_per_x = 200;
  int refine_steps = 50;
  std::uint64_t seed = 0;  // only used for n != 2
};

double height(const UnitVector& r, const UnitVector& x);
double potential(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y);
Vector grad_potential(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y);
double tangent_grad_norm_sq(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y);
double min_over_y(const PotentialConfig& cfg, const UnitVector& x);
UnitVector argmin_over_y(const PotentialConfig& cfg, const UnitVector& x);
double synergy_gap(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y);

ExpConstants exp_constants(const PotentialConfig& cfg, const FlowSetGrid& grid = {},
                           Exec exec = Exec::parallel);

struct PropertyCheck {
  std::string name;
  bool pass = false;
  long long violations = 0;
  long long samples = 0;
  double observed_lo = 0.0;
  double observed_hi = 0.0;
  std::string note;
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;
  bool all_pass() const;
};

/// Samples (x, y) pairs on S^n x Y and checks: (i) V in [0, 1]; (ii) the
/// projected gradient stays above a positive floor away from {r, y}; (iii) the
/// denominator bounds; (iv) the sandwich alpha_low |x-r|^2 <= V <= alpha_up
/// |x-r|^2; (v) Lipschitz-style continuity of mu on near-pairs with an
/// empirically fitted constant. Requires sample_count >= 1000.
PropertyReport verify_potential_properties(const PotentialConfig& cfg, long long sample_count,
                                           std::uint64_t seed = 0, Exec exec = Exec::parallel);

namespace detail {
// Guard-free evaluations on raw coordinate vectors. Used by integrator stage
// evaluations (states slightly off the sphere) and by the grid kernels, where
// the UnitVector wrapper and its checks would dominate the cost.
using Ref = Eigen::Ref<const Vector>;
double potential_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y);
Vector grad_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y);
double tangent_grad_norm_sq_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y);
double min_over_y_raw(const PotentialConfig& cfg, const Ref& x);
Vector argmin_raw(const PotentialConfig& cfg, const Ref& x);
double synergy_gap_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y);
double alpha_branch(const PotentialConfig& cfg, double v);  // gamma v - sqrt((1-v^2)(1-gamma^2))
double sigma_branch(const PotentialConfig& cfg, double v);  // gamma sqrt(1-v^2) + v sqrt(1-gamma^2)
}  // namespace detail

}  // namespace synctl
