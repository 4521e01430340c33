#include "synctl/quad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <sstream>

#include "synctl/errors.hpp"
#include "synctl/riccati.hpp"

namespace synctl {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

Matrix6 double_integrator_a() {
  Matrix6 a = Matrix6::Zero();
  a.topRightCorner<3, 3>() = Eigen::Matrix3d::Identity();
  return a;
}

Eigen::Matrix<double, 6, 3> double_integrator_b() {
  Eigen::Matrix<double, 6, 3> b = Eigen::Matrix<double, 6, 3>::Zero();
  b.bottomRows<3>() = Eigen::Matrix3d::Identity();
  return b;
}

}  // namespace

double CircleReference::m2() const {
  const double w = kTwoPi * freq;
  return w * w;
}

double CircleReference::m3() const {
  const double w = kTwoPi * freq;
  return w * w * w;
}

ReferenceSample reference_eval(const CircleReference& ref, double t) {
  const double w = kTwoPi * ref.freq;
  const double c = std::cos(w * t);
  const double s = std::sin(w * t);
  ReferenceSample out;
  out.p = {c, s, 0.0};
  out.v = {-w * s, w * c, 0.0};
  out.a = {-w * w * c, -w * w * s, 0.0};
  out.jerk = {w * w * w * s, -w * w * w * c, 0.0};
  return out;
}

void validate_sat(const SatConfig& sat, const QuadParams& params, const CircleReference& ref) {
  const double headroom = params.gravity.norm() - ref.m2();
  if (!(sat.b > 0.0 && sat.b < sat.b_max && sat.b_max < headroom)) {
    std::ostringstream os;
    os << "saturation: need 0 < b < b_max < |g| - M2 = " << headroom << ", got b = " << sat.b
       << ", b_max = " << sat.b_max;
    throw ValidationError(os.str());
  }
}

Eigen::Vector3d saturation(const SatConfig& sat, const Eigen::Vector3d& u) {
  const double n = u.norm();
  if (n <= sat.b) return u;
  const double span = sat.b_max - sat.b;
  const double s = sat.b + span * std::tanh((n - sat.b) / span);
  return u * (s / n);
}

Eigen::Matrix3d saturation_jacobian(const SatConfig& sat, const Eigen::Vector3d& u) {
  const double n = u.norm();
  if (n <= sat.b) return Eigen::Matrix3d::Identity();
  const double span = sat.b_max - sat.b;
  const double arg = (n - sat.b) / span;
  const double s = sat.b + span * std::tanh(arg);
  const double sech = 1.0 / std::cosh(arg);
  const double sprime = sech * sech;
  const Eigen::Vector3d uh = u / n;
  return sprime * (uh * uh.transpose()) +
         (s / n) * (Eigen::Matrix3d::Identity() - uh * uh.transpose());
}

double velocity_block_sigma(const Matrix6& p) {
  const Matrix6 half = Eigen::SelfAdjointEigenSolver<Matrix6>(p).operatorSqrt();
  return half.bottomRows<3>().eval().jacobiSvd().singularValues().maxCoeff();
}

Eigen::Vector3d position_feedback(const PositionGains& gains, const SatConfig& sat,
                                  const Eigen::Vector3d& p_tilde, const Eigen::Vector3d& v_tilde) {
  Vector6 z;
  z << p_tilde, v_tilde;
  return saturation(sat, gains.K * z);
}

UnitVector commanded_thrust_dir(const QuadParams& params, const Eigen::Vector3d& w,
                                const Eigen::Vector3d& a_d) {
  const Eigen::Vector3d u = w - params.gravity + a_d;
  if (u.norm() < 1e-9) {
    throw ZeroCommandedThrust("commanded_thrust_dir: |w - g + a_d| < 1e-9");
  }
  return UnitVector(Vector(u.normalized()));
}

double thrust_magnitude(const QuadParams& params, const Rotation& R, const Eigen::Vector3d& w,
                        const Eigen::Vector3d& a_d) {
  const Eigen::Vector3d u = w - params.gravity + a_d;
  const Eigen::Vector3d rb = params.r_body.coords();
  return rb.dot(R.matrix().transpose() * u);
}

Matrix39 rho_jacobian(const QuadParams& params, const PositionGains& gains, const SatConfig& sat,
                      const Vector9& z) {
  const Eigen::Vector3d a_d = z.head<3>();
  const Vector6 err = z.tail<6>();
  const Eigen::Vector3d kz = gains.K * err;
  const Eigen::Vector3d u = saturation(sat, kz) - params.gravity + a_d;
  const double un = u.norm();
  if (un < 1e-9) throw ZeroCommandedThrust("rho_jacobian: |w - g + a_d| < 1e-9");
  const Eigen::Vector3d rho = u / un;
  Matrix39 du;  // derivative of u(z), columns ordered (a_d, p_tilde, v_tilde)
  du.leftCols<3>() = Eigen::Matrix3d::Identity();
  du.rightCols<6>() = saturation_jacobian(sat, kz) * gains.K;
  return ((Eigen::Matrix3d::Identity() - rho * rho.transpose()) / un) * du;
}

double nu_star(const PositionGains& gains, const PotentialConfig& cfg, const QuadParams& params,
               const Eigen::Vector3d& w, const Eigen::Vector3d& a_d) {
  const double s = std::sqrt(1.0 + 2.0 * cfg.k * cfg.gamma + cfg.k * cfg.k);
  const double alpha_low = 1.0 / (2.0 * (1.0 + cfg.k + s));
  const double sig = gains.sigma_vel > 0.0 ? gains.sigma_vel : velocity_block_sigma(gains.P);
  return 2.0 / std::sqrt(alpha_low) * sig * (w - params.gravity + a_d).norm();
}

namespace {

// All loop quantities at one (t, p, v, R, y); raw matrices so integrator
// stages can evaluate slightly off the manifold.
struct LoopEval {
  Eigen::Vector3d p_tilde, v_tilde, w, u;
  double u_norm = 0.0;
  Eigen::Vector3d rho;
  Eigen::Vector3d x;  // R^T rho
  double kappa_u = 0.0;
  Vector9 z;
  ReferenceSample refs;
};

LoopEval eval_loop(const QuadParams& params, const PositionGains& gains, const SatConfig& sat,
                   const CircleReference& ref, double t, const Eigen::Vector3d& p,
                   const Eigen::Vector3d& v, const Eigen::Matrix3d& R) {
  LoopEval e;
  e.refs = reference_eval(ref, t);
  e.p_tilde = p - e.refs.p;
  e.v_tilde = v - e.refs.v;
  e.w = position_feedback(gains, sat, e.p_tilde, e.v_tilde);
  e.u = e.w - params.gravity + e.refs.a;
  e.u_norm = e.u.norm();
  if (e.u_norm < 1e-9) throw ZeroCommandedThrust("quad loop: |w - g + a_d| < 1e-9");
  e.rho = e.u / e.u_norm;
  e.x = R.transpose() * e.rho;
  e.kappa_u = params.r_body.coords().dot(R.transpose() * e.u);
  e.z << e.refs.a, e.p_tilde, e.v_tilde;
  return e;
}

Eigen::Vector3d omega_raw(const QuadParams& params, const PositionGains& gains,
                          const PotentialConfig& cfg, const SatConfig& sat, double k1, double kp,
                          const LoopEval& e, const Eigen::Matrix3d& R, const Eigen::Vector3d& y) {
  Vector9 fp;
  fp << e.refs.jerk, e.v_tilde,
      R * params.r_body.coords() * e.kappa_u + params.gravity - e.refs.a;
  const Matrix39 drho = rho_jacobian(params, gains, sat, e.z);
  const double gain = k1 + kp * nu_star(gains, cfg, params, e.w, e.refs.a);
  const Vector grad = detail::grad_raw(cfg, Vector(e.x), Vector(y));
  const Eigen::Vector3d inner = R.transpose() * (drho * fp) + gain * Eigen::Vector3d(grad);
  return skew(e.x) * inner;
}

Eigen::Vector3d dexpinv(const Eigen::Vector3d& theta, const Eigen::Vector3d& omega) {
  // Truncated inverse differential of exp on so(3); terms through theta^2
  // preserve 4th order in the Munthe-Kaas scheme.
  return omega - 0.5 * theta.cross(omega) + theta.cross(theta.cross(omega)) / 12.0;
}

}  // namespace

Eigen::Vector3d omega_command(const QuadParams& params, const PositionGains& gains,
                              const PotentialConfig& cfg, const SatConfig& sat, double k1,
                              double kp, const CircleReference& ref, double t,
                              const QuadFullState& state, double margin_tol) {
  const LoopEval e = eval_loop(params, gains, sat, ref, t, state.p, state.v, state.R.matrix());
  const double mu = detail::synergy_gap_raw(cfg, Vector(e.x), state.y.coords());
  if (mu > cfg.delta + margin_tol) {
    throw NotInFlowSet("omega_command: mu = " + std::to_string(mu) + " exceeds delta = " +
                       std::to_string(cfg.delta));
  }
  return omega_raw(params, gains, cfg, sat, k1, kp, e, state.R.matrix(), state.y.coords());
}

PositionGains synthesize_gains(const Matrix6& H, const Eigen::Matrix3d& Rhat, const Matrix6& Qhat0,
                               const SatConfig& sat, double kbar1, double kp,
                               const PotentialConfig& cfg) {
  if (!(sat.b > 0.0 && sat.b < sat.b_max)) {
    throw std::invalid_argument("synthesize_gains: need 0 < b < b_max");
  }
  if (!(kbar1 > 0.0 && kp > 0.0)) {
    throw std::invalid_argument("synthesize_gains: kbar1 and kp must be positive");
  }
  const Matrix6 a = double_integrator_a();
  const Eigen::Matrix<double, 6, 3> b = double_integrator_b();

  const double nubar = kbar1 * std::sqrt(1.0);  // max V over S^n x Y is 1
  const double ell = (1.0 + nubar) * (1.0 + nubar);
  const double sv_budget = sat.b * sat.b / ell;

  struct Trial {
    Matrix6 p;
    Matrix36 k;
    double ph_min_eig;
    double sv_sq;
    bool feasible;
  };
  auto attempt = [&](double eps) {
    Trial t;
    const Eigen::MatrixXd p = care_solve(a, b, eps * Qhat0, Rhat);
    t.p = p;
    t.k = -(Rhat.ldlt().solve(b.transpose() * t.p));
    t.ph_min_eig =
        Eigen::SelfAdjointEigenSolver<Matrix6>(H / ell - t.p / ell).eigenvalues().minCoeff();
    const Eigen::Matrix<double, 3, 6> rb =
        Rhat.ldlt().solve(b.transpose() *
                          Eigen::SelfAdjointEigenSolver<Matrix6>(t.p).operatorSqrt());
    t.sv_sq = rb.jacobiSvd().singularValues().maxCoeff();
    t.sv_sq *= t.sv_sq;
    t.feasible = t.ph_min_eig >= -1e-10 && t.sv_sq <= sv_budget;
    return t;
  };

  constexpr int kGridPoints = 60;
  int best = -1;
  std::vector<double> grid(kGridPoints);
  for (int i = 0; i < kGridPoints; ++i) {
    grid[i] = std::pow(10.0, -6.0 + 6.0 * i / (kGridPoints - 1));
    if (attempt(grid[i]).feasible) best = i;
  }
  if (best < 0) {
    throw Infeasible("synthesize_gains: no epsilon in [1e-6, 1] satisfies both containments for b = " +
                     std::to_string(sat.b));
  }
  double eps = grid[best];
  if (best + 1 < kGridPoints) {
    double lo = grid[best], hi = grid[best + 1];
    for (int i = 0; i < 30; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (attempt(mid).feasible) lo = mid;
      else hi = mid;
    }
    eps = lo;
  }

  const Trial t = attempt(eps);
  PositionGains gains;
  gains.K = t.k;
  gains.P = t.p;
  gains.Qhat = eps * Qhat0;
  gains.Rhat = Rhat;
  gains.H = H;
  gains.ellP = ell;
  gains.ellH = ell;
  gains.b = sat.b;
  gains.b_max = sat.b_max;
  gains.sigma_vel = velocity_block_sigma(t.p);

  CertificateInfo& info = gains.info;
  info.epsilon = eps;
  const Matrix6 acl = a + b * gains.K;
  const Matrix6 qr_lhs = acl.transpose() * gains.P + gains.P * acl + gains.Qhat +
                         gains.K.transpose() * Rhat * gains.K;
  info.qr_residual_max_eig = Eigen::SelfAdjointEigenSolver<Matrix6>(qr_lhs).eigenvalues().maxCoeff();
  info.ph_min_eig = t.ph_min_eig;
  info.sv_sq = t.sv_sq;
  info.sv_budget = sv_budget;

  // Both readings of the gain-product check, using the analytic flow-set bound for
  // V* (conservative: it under-estimates lambda).
  const double s = std::sqrt(1.0 + 2.0 * cfg.k * cfg.gamma + cfg.k * cfg.k);
  const double vbound = cfg.delta + 2.0 / (2.0 + cfg.k * (1.0 + cfg.gamma));
  const double num = 2.0 * cfg.k * (1.0 - vbound) * (1.0 - cfg.gamma);
  const double den = 1.0 + cfg.k + s;
  info.bark1_product_gg = kp * kbar1 * (num / (den * den));
  info.bark1_product_unsquared = kp * kbar1 * (num / den);
  info.bark1_ok_gg = info.bark1_product_gg > 1.0;
  info.bark1_ok_unsquared = info.bark1_product_unsquared > 1.0;
  return gains;
}

Vector pack_quad_state(const QuadFullState& s) {
  Vector packed(18);
  packed.segment<3>(0) = s.p;
  packed.segment<3>(3) = s.v;
  packed.segment<9>(6) = Eigen::Map<const Vector9>(s.R.matrix().data());
  packed.segment<3>(15) = s.y.coords();
  return packed;
}

QuadFullState unpack_quad_state(const Vector& packed) {
  const Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix3d>(packed.segment<9>(6).data());
  return QuadFullState{packed.segment<3>(0), packed.segment<3>(3), Rotation(r),
                       UnitVector(packed.segment<3>(15))};
}

HybridArc simulate_tracking(const QuadParams& params, const PositionGains& gains,
                            const PotentialConfig& cfg, const SatConfig& sat, double k1, double kp,
                            const CircleReference& ref, const QuadFullState& initial,
                            const SolverConfig& solver) {
  if (!(ref.m2() < params.gravity.norm())) {
    throw std::invalid_argument("simulate_tracking: reference violates M2 < |g|");
  }
  if (!cfg.in_logic_set(initial.y)) {
    throw LogicVarOutsideY("simulate_tracking: initial y outside Y");
  }

  HybridSystemDef sys;
  sys.flow_step = [params, gains, cfg, sat, k1, kp, ref](double t, const Vector& state, double h) {
    const Eigen::Vector3d p0 = state.segment<3>(0);
    const Eigen::Vector3d v0 = state.segment<3>(3);
    const Eigen::Matrix3d r0 = Eigen::Map<const Eigen::Matrix3d>(state.segment<9>(6).data());
    const Eigen::Vector3d y = state.segment<3>(15);

    // Munthe-Kaas RK4: p, v advance with classic stages; the rotation advances
    // through exp(S(theta)) with dexpinv-corrected stage derivatives.
    auto stage = [&](double ts, const Eigen::Vector3d& p, const Eigen::Vector3d& v,
                     const Eigen::Vector3d& theta, Eigen::Vector3d& dp, Eigen::Vector3d& dv,
                     Eigen::Vector3d& dtheta) {
      const Eigen::Matrix3d r = r0 * rotation_exp(theta);
      const LoopEval e = eval_loop(params, gains, sat, ref, ts, p, v, r);
      const Eigen::Vector3d omega = omega_raw(params, gains, cfg, sat, k1, kp, e, r, y);
      dp = v;
      dv = r * params.r_body.coords() * e.kappa_u + params.gravity;
      dtheta = dexpinv(theta, omega);
    };

    Eigen::Vector3d dp1, dv1, dth1, dp2, dv2, dth2, dp3, dv3, dth3, dp4, dv4, dth4;
    const Eigen::Vector3d zero = Eigen::Vector3d::Zero();
    stage(t, p0, v0, zero, dp1, dv1, dth1);
    stage(t + 0.5 * h, p0 + 0.5 * h * dp1, v0 + 0.5 * h * dv1, 0.5 * h * dth1, dp2, dv2, dth2);
    stage(t + 0.5 * h, p0 + 0.5 * h * dp2, v0 + 0.5 * h * dv2, 0.5 * h * dth2, dp3, dv3, dth3);
    stage(t + h, p0 + h * dp3, v0 + h * dv3, h * dth3, dp4, dv4, dth4);

    Vector out(18);
    out.segment<3>(0) = p0 + (h / 6.0) * (dp1 + 2.0 * dp2 + 2.0 * dp3 + dp4);
    out.segment<3>(3) = v0 + (h / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4);
    const Eigen::Matrix3d rnew =
        r0 * rotation_exp((h / 6.0) * (dth1 + 2.0 * dth2 + 2.0 * dth3 + dth4));
    out.segment<9>(6) = Eigen::Map<const Vector9>(rnew.data());
    out.segment<3>(15) = y;
    return out;
  };
  sys.jump_margin = [params, gains, cfg, sat, ref](double t, const Vector& state) {
    const Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix3d>(state.segment<9>(6).data());
    const LoopEval e =
        eval_loop(params, gains, sat, ref, t, state.segment<3>(0), state.segment<3>(3), r);
    return detail::synergy_gap_raw(cfg, Vector(e.x), state.segment<3>(15)) - cfg.delta;
  };
  sys.jump_map = [params, gains, cfg, sat, ref](double t, const Vector& state) {
    const Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix3d>(state.segment<9>(6).data());
    const LoopEval e =
        eval_loop(params, gains, sat, ref, t, state.segment<3>(0), state.segment<3>(3), r);
    Vector out = state;
    out.segment<3>(15) = detail::argmin_raw(cfg, Vector(e.x));
    return out;
  };

  return solve(sys, pack_quad_state(initial), solver);
}

QuadDerived quad_derived(const QuadParams& params, const PositionGains& gains,
                         const PotentialConfig& cfg, const SatConfig& sat,
                         const CircleReference& ref, double t, const Vector& packed_state) {
  const Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix3d>(packed_state.segment<9>(6).data());
  const LoopEval e = eval_loop(params, gains, sat, ref, t, packed_state.segment<3>(0),
                               packed_state.segment<3>(3), r);
  const Vector y = packed_state.segment<3>(15);
  QuadDerived d;
  d.v1 = detail::potential_raw(cfg, Vector(e.x), y);
  d.mu = d.v1 - detail::min_over_y_raw(cfg, Vector(e.x));
  Vector6 z;
  z << e.p_tilde, e.v_tilde;
  d.kz_norm = (gains.K * z).norm();
  d.kappa_u = e.kappa_u;
  return d;
}

TrackingMetrics tracking_metrics(const HybridArc& arc, const QuadParams& params,
                                 const PositionGains& gains, const PotentialConfig& cfg,
                                 const SatConfig& sat, const CircleReference& ref, double kbar1) {
  TrackingMetrics m;
  m.min_w1_jump_drop = std::numeric_limits<double>::infinity();

  double st = 0.0, sw = 0.0, stt = 0.0, stw = 0.0;
  long long nfit = 0;
  auto w1_at = [&](double t, const Vector& state) {
    const Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix3d>(state.segment<9>(6).data());
    const LoopEval e =
        eval_loop(params, gains, sat, ref, t, state.segment<3>(0), state.segment<3>(3), r);
    Vector6 z;
    z << e.p_tilde, e.v_tilde;
    const double vp = z.dot(gains.P * z);
    const double v1 = detail::potential_raw(cfg, Vector(e.x), state.segment<3>(15));
    return std::sqrt(std::max(0.0, vp)) + kbar1 * std::sqrt(std::max(0.0, v1));
  };

  for (std::size_t pi = 0; pi < arc.phases.size(); ++pi) {
    const Phase& ph = arc.phases[pi];
    for (const Sample& smp : ph.samples) {
      const QuadDerived d = quad_derived(params, gains, cfg, sat, ref, smp.t, smp.state);
      m.max_kz_norm = std::max(m.max_kz_norm, d.kz_norm);
      const double w1 = w1_at(smp.t, smp.state);
      if (w1 > 1e-12) {
        const double lw = std::log(w1);
        st += smp.t;
        sw += lw;
        stt += smp.t * smp.t;
        stw += smp.t * lw;
        ++nfit;
      }
    }
    if (pi + 1 < arc.phases.size()) {
      const Sample& pre = ph.samples.back();
      const Sample& post = arc.phases[pi + 1].samples.front();
      m.jump_times.push_back(pre.t);
      m.min_w1_jump_drop =
          std::min(m.min_w1_jump_drop, w1_at(pre.t, pre.state) - w1_at(post.t, post.state));
    }
  }
  m.sat_bound_ok = m.max_kz_norm <= gains.b + 1e-12;

  {
    const Sample& s0 = arc.first();
    const Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix3d>(s0.state.segment<9>(6).data());
    const LoopEval e =
        eval_loop(params, gains, sat, ref, s0.t, s0.state.segment<3>(0), s0.state.segment<3>(3), r);
    Vector6 z;
    z << e.p_tilde, e.v_tilde;
    m.initial_in_omega_h = z.dot(gains.H * z) <= 1.0 + 1e-12;
  }
  if (nfit >= 2) {
    const double den = nfit * stt - st * st;
    m.w1_rate = den > 0.0 ? -(nfit * stw - st * sw) / den : std::numeric_limits<double>::quiet_NaN();
  } else {
    m.w1_rate = std::numeric_limits<double>::quiet_NaN();
  }
  {
    const Sample& sl = arc.last();
    const ReferenceSample refs = reference_eval(ref, sl.t);
    m.final_pos_err = (sl.state.segment<3>(0) - refs.p).norm();
    m.final_vel_err = (sl.state.segment<3>(3) - refs.v).norm();
  }
  return m;
}

}  // namespace synctl
