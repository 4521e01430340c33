#pragma once

#include <vector>

#include "synctl/hybrid.hpp"
#include "synctl/potential.hpp"
#include "synctl/sphere.hpp"

namespace synctl {

using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix36 = Eigen::Matrix<double, 3, 6>;
using Matrix39 = Eigen::Matrix<double, 3, 9>;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Vector9 = Eigen::Matrix<double, 9, 1>;

struct QuadParams {
  Eigen::Vector3d gravity{0.0, 0.0, 9.81};
  UnitVector r_body{0.0, 0.0, -1.0};  // thrust direction in body frame
};

/// Circular reference p_d(t) = (cos 2 pi f t, sin 2 pi f t, 0), radius 1.
struct CircleReference {
  double freq = 0.2;  // [Hz]

  double m2() const;  // (2 pi f)^2, the acceleration bound
  double m3() const;  // (2 pi f)^3, the jerk bound
};

struct ReferenceSample {
  Eigen::Vector3d p, v, a, jerk;
};

ReferenceSample reference_eval(const CircleReference& ref, double t);

/// Radial C^1 saturation: identity inside the b-ball, tanh-blended towards the
/// b_max asymptote outside.
struct SatConfig {
  double b = 6.0;      // [m/s^2] linear zone radius
  double b_max = 8.0;  // [m/s^2] asymptote
};

/// Throws ValidationError unless 0 < b < b_max < |g| - M2.
void validate_sat(const SatConfig& sat, const QuadParams& params, const CircleReference& ref);

Eigen::Vector3d saturation(const SatConfig& sat, const Eigen::Vector3d& u);
Eigen::Matrix3d saturation_jacobian(const SatConfig& sat, const Eigen::Vector3d& u);

/// Synthesis record: the accepted epsilon, certificate residuals, and the
/// k_p kbar_1 lambda_1 > 1 check under both lambda readings (reported, never
/// enforced).
struct CertificateInfo {
  double epsilon = 0.0;
  double qr_residual_max_eig = 0.0;   // max eig of (A+BK)^T P + P (A+BK) + Qhat + K^T Rhat K
  double ph_min_eig = 0.0;            // min eig of H/ellH - P/ellP
  double sv_sq = 0.0;                 // sigma_max(Rhat^-1 B^T P^1/2)^2
  double sv_budget = 0.0;             // b^2 / ellP
  double bark1_product_gg = 0.0;      // k_p kbar1 lambda with the squared-denominator lambda
  double bark1_product_unsquared = 0.0;
  bool bark1_ok_gg = false;
  bool bark1_ok_unsquared = false;
};

struct PositionGains {
  Matrix36 K;
  Matrix6 P;
  Matrix6 Qhat;
  Eigen::Matrix3d Rhat;
  Matrix6 H;
  double ellP = 0.0;
  double ellH = 0.0;
  double b = 0.0;
  double b_max = 0.0;
  double sigma_vel = 0.0;  // sigma_max([0 I] P^1/2), cached for nu_star
  CertificateInfo info;
};

/// sigma_max([0 I3] P^1/2) with the symmetric square root.
double velocity_block_sigma(const Matrix6& p);

/// w = Sat_b(K [p_tilde; v_tilde]).
Eigen::Vector3d position_feedback(const PositionGains& gains, const SatConfig& sat,
                                  const Eigen::Vector3d& p_tilde, const Eigen::Vector3d& v_tilde);

/// rho = (w - g + a_d) / |w - g + a_d|; throws ZeroCommandedThrust below 1e-9.
UnitVector commanded_thrust_dir(const QuadParams& params, const Eigen::Vector3d& w,
                                const Eigen::Vector3d& a_d);

/// kappa_u = r_body^T R^T (w - g + a_d), the least-squares thrust magnitude.
double thrust_magnitude(const QuadParams& params, const Rotation& R, const Eigen::Vector3d& w,
                        const Eigen::Vector3d& a_d);

/// D_z rho(z) with z = (a_d, p_tilde, v_tilde):
/// (I - rho rho^T)/|u| [I3 | J_sat K].
Matrix39 rho_jacobian(const QuadParams& params, const PositionGains& gains, const SatConfig& sat,
                      const Vector9& z);

/// nu*(z) = (2/sqrt(alpha_low)) sigma_max([0 I3] P^1/2) |w - g + a_d|.
double nu_star(const PositionGains& gains, const PotentialConfig& cfg, const QuadParams& params,
               const Eigen::Vector3d& w, const Eigen::Vector3d& a_d);

struct QuadFullState {
  Eigen::Vector3d p;
  Eigen::Vector3d v;
  Rotation R;
  UnitVector y;
};

/// Angular-velocity command
///   omega = S(x) (R^T D_z rho F_p + (k1 + kp nu*) grad V^y(x)),  x = R^T rho(z),
/// with F_p = (jerk_d, v_tilde, R r_body kappa_u + g - a_d). Throws
/// NotInFlowSet when mu(x, y) > delta + margin_tol.
Eigen::Vector3d omega_command(const QuadParams& params, const PositionGains& gains,
                              const PotentialConfig& cfg, const SatConfig& sat, double k1,
                              double kp, const CircleReference& ref, double t,
                              const QuadFullState& state, double margin_tol = 1e-9);

/// Design steps C1-C4 with the constructive epsilon-search: ellH = ellP =
/// (1 + kbar1)^2 (max V = 1), then the largest epsilon on a 60-point log grid
/// in [1e-6, 1] (plus 30 bisection refinements) whose CARE solution satisfies
/// both containment certificates. Throws Infeasible when no grid point does.
PositionGains synthesize_gains(const Matrix6& H, const Eigen::Matrix3d& Rhat, const Matrix6& Qhat0,
                               const SatConfig& sat, double kbar1, double kp,
                               const PotentialConfig& cfg);

Vector pack_quad_state(const QuadFullState& s);
QuadFullState unpack_quad_state(const Vector& packed);

/// Closed loop H1: flow integrates p, v by RK4 and R by the rotation
/// exponential (Munthe-Kaas stages); jumps set y+ = argmin at mu >= delta.
HybridArc simulate_tracking(const QuadParams& params, const PositionGains& gains,
                            const PotentialConfig& cfg, const SatConfig& sat, double k1, double kp,
                            const CircleReference& ref, const QuadFullState& initial,
                            const SolverConfig& solver);

/// Derived per-sample quantities recorded alongside exported arcs.
struct QuadDerived {
  double v1;       // V(R^T rho(z), y)
  double mu;       // synergy gap at (R^T rho(z), y)
  double kz_norm;  // |K (p_tilde; v_tilde)|
  double kappa_u;
};

QuadDerived quad_derived(const QuadParams& params, const PositionGains& gains,
                         const PotentialConfig& cfg, const SatConfig& sat,
                         const CircleReference& ref, double t, const Vector& packed_state);

struct TrackingMetrics {
  double max_kz_norm = 0.0;
  bool sat_bound_ok = false;       // max |K z| <= b
  bool initial_in_omega_h = false; // z(0)^T H z(0) <= 1
  double w1_rate = 0.0;            // fitted decay rate of W1 = sqrt(Vp) + kbar1 sqrt(V1)
  std::vector<double> jump_times;
  double min_w1_jump_drop = 0.0;   // +inf when no jumps
  double final_pos_err = 0.0;
  double final_vel_err = 0.0;
};

TrackingMetrics tracking_metrics(const HybridArc& arc, const QuadParams& params,
                                 const PositionGains& gains, const PotentialConfig& cfg,
                                 const SatConfig& sat, const CircleReference& ref, double kbar1);

}  // namespace synctl
