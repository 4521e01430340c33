#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "synctl/errors.hpp"
#include "synctl/quad.hpp"
#include "synctl/riccati.hpp"

using namespace synctl;

namespace {

PotentialConfig body_cfg() { return PotentialConfig(UnitVector{0.0, 0.0, -1.0}, 1.0, -0.5, 0.1); }

Matrix6 fixture_h() {
  Matrix6 h = Matrix6::Zero();
  h.diagonal() << 500, 500, 500, 100, 100, 100;
  return h;
}

Matrix6 fixture_qhat0() {
  Matrix6 q = Matrix6::Zero();
  q.diagonal() << 10, 10, 100, 100, 100, 1;
  return q;
}

PositionGains fixture_gains(const SatConfig& sat = SatConfig{}) {
  return synthesize_gains(fixture_h(), 10.0 * Eigen::Matrix3d::Identity(), fixture_qhat0(), sat,
                          12.0, 1.0, body_cfg());
}

QuadFullState upside_down_initial(const CircleReference& ref) {
  const ReferenceSample r0 = reference_eval(ref, 0.0);
  return QuadFullState{r0.p, r0.v, Rotation(Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal()),
                       UnitVector{0.0, 0.0, 1.0}};
}

// Rotation aligning the body thrust axis with the commanded direction at t=0.
Rotation aligned_rotation(const QuadParams& params, const CircleReference& ref) {
  const ReferenceSample r0 = reference_eval(ref, 0.0);
  const Eigen::Vector3d u = -params.gravity + r0.a;
  const Eigen::Vector3d rho = u.normalized();
  const Eigen::Vector3d rb = params.r_body.coords();
  const Eigen::Vector3d axis = rb.cross(rho);
  const double angle = std::acos(std::clamp(rb.dot(rho), -1.0, 1.0));
  if (axis.norm() < 1e-12) return Rotation::identity();
  return Rotation(rotation_exp(axis.normalized() * angle));
}

}  // namespace

TEST_CASE("reference_eval") {
  CircleReference ref{0.2};
  const ReferenceSample r0 = reference_eval(ref, 0.0);
  CHECK((r0.p - Eigen::Vector3d(1.0, 0.0, 0.0)).norm() <= 1e-15);
  CHECK((r0.v - Eigen::Vector3d(0.0, 2.0 * M_PI * 0.2, 0.0)).norm() <= 1e-15);
  CHECK(ref.m2() == doctest::Approx(1.579).epsilon(1e-3));
  CHECK(ref.m2() < 9.81);
  for (double t : {0.0, 0.37, 2.2, 9.1}) {
    const ReferenceSample rs = reference_eval(ref, t);
    CHECK(rs.a.norm() == doctest::Approx(ref.m2()).epsilon(1e-12));
    CHECK(rs.jerk.norm() == doctest::Approx(ref.m3()).epsilon(1e-12));
  }
}

TEST_CASE("saturation") {
  SatConfig sat{4.0, 6.0};
  const Eigen::Vector3d small(1.0, -0.5, 0.3);
  CHECK((saturation(sat, small) - small).norm() == 0.0);
  CHECK((saturation_jacobian(sat, small) - Eigen::Matrix3d::Identity()).norm() == 0.0);

  SUBCASE("asymptote from below") {
    const Eigen::Vector3d huge(400.0, -300.0, 10.0);
    const double n = saturation(sat, huge).norm();
    CHECK(n < sat.b_max);
    CHECK(n > sat.b_max - 0.01);
  }

  SUBCASE("Jacobian matches finite differences outside the linear zone") {
    std::mt19937_64 eng(17);
    std::normal_distribution<double> gauss;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      Eigen::Vector3d u(gauss(eng), gauss(eng), gauss(eng));
      u *= (4.5 + 3.0 * std::abs(gauss(eng))) / u.norm();  // |u| > b
      const Eigen::Matrix3d jac = saturation_jacobian(sat, u);
      for (int c = 0; c < 3; ++c) {
        const double h = 1e-7;
        Eigen::Vector3d up = u, dn = u;
        up[c] += h;
        dn[c] -= h;
        const Eigen::Vector3d fd = (saturation(sat, up) - saturation(sat, dn)) / (2.0 * h);
        worst = std::max(worst, (jac.col(c) - fd).norm() / std::max(fd.norm(), 1e-8));
      }
    }
    CHECK(worst < 1e-6);
  }

  SUBCASE("C1 across the boundary") {
    const Eigen::Vector3d at_b(4.0, 0.0, 0.0);
    CHECK((saturation_jacobian(sat, at_b * (1.0 + 1e-9)) - Eigen::Matrix3d::Identity()).norm() <=
          1e-6);
  }

  SUBCASE("validation against reference headroom") {
    QuadParams params;
    CircleReference ref{0.2};
    CHECK_NOTHROW(validate_sat(SatConfig{6.0, 8.0}, params, ref));
    CHECK_THROWS_AS(validate_sat(SatConfig{6.0, 8.5}, params, ref), ValidationError);
    CHECK_THROWS_AS(validate_sat(SatConfig{8.0, 6.0}, params, ref), ValidationError);
    CHECK_THROWS_AS(validate_sat(SatConfig{0.0, 6.0}, params, ref), ValidationError);
  }
}

TEST_CASE("commanded thrust direction and magnitude") {
  QuadParams params;

  SUBCASE("hover") {
    const UnitVector rho = commanded_thrust_dir(params, Eigen::Vector3d::Zero(),
                                                Eigen::Vector3d::Zero());
    CHECK((rho.coords() - Vector(Eigen::Vector3d(0.0, 0.0, -1.0))).norm() <= 1e-15);
    CHECK(thrust_magnitude(params, Rotation::identity(), Eigen::Vector3d::Zero(),
                           Eigen::Vector3d::Zero()) == doctest::Approx(9.81));
  }

  SUBCASE("alignment closes the loop to the double integrator") {
    CircleReference ref{0.2};
    const Rotation R = aligned_rotation(params, ref);
    const Eigen::Vector3d a0 = reference_eval(ref, 0.0).a;
    REQUIRE((R.matrix() * params.r_body.coords() -
             (-params.gravity + a0).normalized()).norm() <= 1e-12);
    const Eigen::Vector3d w(0.0, 0.0, 0.0);
    const double ku = thrust_magnitude(params, R, w, a0);
    const Eigen::Vector3d accel = R.matrix() * params.r_body.coords() * ku + params.gravity - a0;
    CHECK((accel - w).norm() <= 1e-12);
  }

  SUBCASE("kappa_u solves the scalar least-squares problem") {
    std::mt19937_64 eng(23);
    std::normal_distribution<double> gauss;
    for (int trial = 0; trial < 20; ++trial) {
      const Rotation R(rotation_exp(Eigen::Vector3d(gauss(eng), gauss(eng), gauss(eng))));
      const Eigen::Vector3d w(gauss(eng), gauss(eng), gauss(eng));
      const Eigen::Vector3d a(gauss(eng), gauss(eng), gauss(eng));
      const double ku = thrust_magnitude(params, R, w, a);
      auto objective = [&](double u) {
        return (R.matrix() * params.r_body.coords() * u + params.gravity - a - w).squaredNorm();
      };
      for (double du : {-0.1, -0.01, 0.01, 0.1}) {
        CHECK(objective(ku) <= objective(ku + du) + 1e-12);
      }
    }
  }

  CHECK_THROWS_AS(commanded_thrust_dir(params, params.gravity, Eigen::Vector3d::Zero()),
                  ZeroCommandedThrust);
}

TEST_CASE("rho_jacobian") {
  QuadParams params;
  SatConfig sat{4.0, 6.0};
  const PositionGains gains = fixture_gains(SatConfig{6.0, 8.0});

  std::mt19937_64 eng(31);
  std::normal_distribution<double> gauss;
  auto rho_of = [&](const Vector9& z) {
    const Eigen::Vector3d u =
        saturation(sat, gains.K * z.tail<6>()) - params.gravity + Eigen::Vector3d(z.head<3>());
    return Eigen::Vector3d(u.normalized());
  };

  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    Vector9 z;
    for (int i = 0; i < 9; ++i) z[i] = gauss(eng);
    z.head<3>() *= 1.5 / std::max(z.head<3>().norm(), 1.0);  // a_d within the M2 ball
    const Matrix39 jac = rho_jacobian(params, gains, sat, z);

    for (int c = 0; c < 9; ++c) {
      const double h = 1e-6;
      Vector9 up = z, dn = z;
      up[c] += h;
      dn[c] -= h;
      const Eigen::Vector3d fd = (rho_of(up) - rho_of(dn)) / (2.0 * h);
      worst = std::max(worst, (jac.col(c) - fd).norm() / std::max(1e-8, fd.norm() + 1e-3));
    }

    const Eigen::Vector3d rho = rho_of(z);
    Vector9 dir;
    for (int i = 0; i < 9; ++i) dir[i] = gauss(eng);
    CHECK(std::abs(rho.dot(jac * dir)) <= 1e-10 * dir.norm());
  }
  CHECK(worst < 1e-5);

  SUBCASE("linear-zone block") {
    Vector9 z = Vector9::Zero();
    z.head<3>() = Eigen::Vector3d(0.5, -0.3, 0.0);
    z.tail<6>() = 1e-3 * Vector6::Ones();  // |Kz| << b
    const Eigen::Vector3d u =
        saturation(sat, gains.K * z.tail<6>()) - params.gravity + Eigen::Vector3d(z.head<3>());
    const Eigen::Vector3d rho = u.normalized();
    const Eigen::Matrix3d proj = Eigen::Matrix3d::Identity() - rho * rho.transpose();
    const Matrix39 jac = rho_jacobian(params, gains, sat, z);
    CHECK((jac.rightCols<6>() - proj * gains.K / u.norm()).norm() <= 1e-12);
  }
}

TEST_CASE("nu_star") {
  QuadParams params;
  params.gravity.setZero();  // lets w - g + a_d vanish
  PositionGains gains;
  gains.P = Matrix6::Identity();
  gains.sigma_vel = velocity_block_sigma(gains.P);
  const PotentialConfig cfg = body_cfg();

  CHECK(nu_star(gains, cfg, params, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()) == 0.0);

  const Eigen::Vector3d w(1.0, 2.0, -1.0);
  const double base = nu_star(gains, cfg, params, w, Eigen::Vector3d::Zero());
  CHECK(nu_star(gains, cfg, params, 2.0 * w, Eigen::Vector3d::Zero()) ==
        doctest::Approx(2.0 * base).epsilon(1e-12));

  QuadParams earth;
  CHECK(nu_star(gains, cfg, earth, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()) ==
        doctest::Approx(2.0 * std::sqrt(6.0) * 9.81).epsilon(1e-12));
}

TEST_CASE("synthesize_gains on the paper fixture") {
  const SatConfig sat{6.0, 8.0};
  const PositionGains g = fixture_gains(sat);

  CHECK(g.ellP == doctest::Approx(169.0));  // (1 + 12)^2
  CHECK(g.ellH == g.ellP);
  CHECK(g.info.qr_residual_max_eig <= 1e-8);
  CHECK(g.info.ph_min_eig >= -1e-10);
  CHECK(g.info.sv_sq <= g.info.sv_budget + 1e-15);
  CHECK(g.b == 6.0);

  SUBCASE("K is the Riccati gain") {
    Eigen::Matrix<double, 6, 3> b = Eigen::Matrix<double, 6, 3>::Zero();
    b.bottomRows<3>().setIdentity();
    const Matrix36 k = -(10.0 * Eigen::Matrix3d::Identity()).ldlt().solve(b.transpose() * g.P);
    CHECK((k - g.K).norm() <= 1e-12);
  }

  SUBCASE("bark1 reported under both lambda readings") {
    CHECK(g.info.bark1_product_unsquared > 1.0);  // 12 * 0.1
    CHECK(g.info.bark1_product_gg < 1.0);         // 12 * 0.0333 / ...
  }

  SUBCASE("feasibility is monotone in b") {
    std::vector<bool> feasible;
    for (double b : {0.01, 0.03, 0.1, 0.5, 2.0, 6.0}) {
      try {
        fixture_gains(SatConfig{b, b + 1.0});
        feasible.push_back(true);
      } catch (const Infeasible&) {
        feasible.push_back(false);
      }
    }
    CHECK_FALSE(feasible.front());
    CHECK(feasible.back());
    CHECK(std::is_sorted(feasible.begin(), feasible.end()));
  }
}

TEST_CASE("omega_command") {
  QuadParams params;
  const PotentialConfig cfg = body_cfg();
  const PositionGains gains = fixture_gains(SatConfig{6.0, 8.0});

  SUBCASE("static hover with aligned attitude gives zero command") {
    CircleReference hover{0.0};  // degenerate circle: p_d = (1, 0, 0) forever
    const ReferenceSample r0 = reference_eval(hover, 0.0);
    const QuadFullState state{r0.p, r0.v, Rotation::identity(), UnitVector{0.0, 0.0, 1.0}};
    const Eigen::Vector3d omega = omega_command(params, gains, cfg, SatConfig{6.0, 8.0}, 1.0, 1.0,
                                                hover, 0.0, state);
    CHECK(omega.norm() <= 1e-12);
  }

  SUBCASE("refuses states in the jump set") {
    CircleReference ref{0.2};
    const QuadFullState state = upside_down_initial(ref);
    CHECK_THROWS_AS(
        omega_command(params, gains, cfg, SatConfig{6.0, 8.0}, 1.0, 1.0, ref, 0.0, state),
        NotInFlowSet);
  }
}

TEST_CASE("simulate_tracking: upside-down scenario") {
  QuadParams params;
  const PotentialConfig cfg = body_cfg();
  const SatConfig sat{6.0, 8.0};
  const PositionGains gains = fixture_gains(sat);
  CircleReference ref{0.2};

  SolverConfig solver;
  solver.max_time = 2.0;
  solver.record_stride = 10;
  const HybridArc arc =
      simulate_tracking(params, gains, cfg, sat, 1.0, 1.0, ref, upside_down_initial(ref), solver);
  arc.check_invariants();

  REQUIRE(arc.jump_count() == 1);
  CHECK(arc.phases[0].samples.size() == 1);
  CHECK(arc.phases[0].samples[0].t == 0.0);

  SUBCASE("jump lands on the paper's logic value and drops V") {
    const Vector ypost = arc.phases[1].samples.front().state.segment<3>(15);
    Vector expected(3);
    expected << std::sqrt(3.0) / 2.0, 0.0, 0.5;
    CHECK((ypost - expected).norm() <= 1e-2);

    const QuadDerived pre = quad_derived(params, gains, cfg, sat, ref, 0.0,
                                         arc.phases[0].samples[0].state);
    const QuadDerived post = quad_derived(params, gains, cfg, sat, ref, 0.0,
                                          arc.phases[1].samples[0].state);
    CHECK(post.v1 < pre.v1 - cfg.delta + 1e-9);
    CHECK(std::abs(post.mu) <= 1e-12);
  }

  SUBCASE("V decreases along the flow and the attitude settles") {
    double vprev = std::numeric_limits<double>::infinity();
    for (const Sample& s : arc.phases[1].samples) {
      const QuadDerived d = quad_derived(params, gains, cfg, sat, ref, s.t, s.state);
      CHECK(d.v1 <= vprev + 1e-9);
      vprev = d.v1;
    }
    CHECK(vprev <= 1e-4);  // attitude aligned within 2 s
  }

  SUBCASE("gradient descends along the induced attitude flow") {
    const Sample& a = arc.phases[1].samples[1];
    const Sample& b = arc.phases[1].samples[2];
    auto xdir = [&](const Sample& s) {
      const QuadFullState q = unpack_quad_state(s.state);
      const ReferenceSample rs = reference_eval(ref, s.t);
      const Eigen::Vector3d w =
          position_feedback(gains, sat, q.p - rs.p, q.v - rs.v);
      return Eigen::Vector3d(q.R.matrix().transpose() *
                             (w - params.gravity + rs.a).normalized());
    };
    const Eigen::Vector3d x1 = xdir(a), x2 = xdir(b);
    const Vector grad = grad_potential(cfg, UnitVector(Vector(x1)),
                                       UnitVector(Vector(a.state.segment<3>(15))));
    CHECK(Eigen::Vector3d(grad).dot(x2 - x1) < 0.0);
  }

  SUBCASE("metrics") {
    const TrackingMetrics m = tracking_metrics(arc, params, gains, cfg, sat, ref, 12.0);
    CHECK(m.sat_bound_ok);
    CHECK(m.initial_in_omega_h);
    REQUIRE(m.jump_times.size() == 1);
    CHECK(m.jump_times[0] == 0.0);
    CHECK(m.min_w1_jump_drop > 0.0);
    CHECK(m.max_kz_norm <= gains.b);
  }
}

TEST_CASE("simulate_tracking: exact tracking is an equilibrium") {
  QuadParams params;
  const PotentialConfig cfg = body_cfg();
  const SatConfig sat{6.0, 8.0};
  const PositionGains gains = fixture_gains(sat);
  CircleReference ref{0.2};

  const ReferenceSample r0 = reference_eval(ref, 0.0);
  const QuadFullState initial{r0.p, r0.v, aligned_rotation(params, ref),
                              UnitVector{0.0, 0.0, 1.0}};
  SolverConfig solver;
  solver.max_time = 10.0;
  solver.record_stride = 100;
  const HybridArc arc = simulate_tracking(params, gains, cfg, sat, 1.0, 1.0, ref, initial, solver);
  CHECK(arc.jump_count() == 0);
  double worst = 0.0;
  for (const Phase& ph : arc.phases) {
    for (const Sample& s : ph.samples) {
      worst = std::max(worst, (s.state.segment<3>(0) - reference_eval(ref, s.t).p).norm());
    }
  }
  CHECK(worst <= 1e-6);

  const TrackingMetrics m = tracking_metrics(arc, params, gains, cfg, sat, ref, 12.0);
  CHECK(m.final_pos_err <= 1e-6);
  CHECK(m.final_vel_err <= 1e-6);
  CHECK(m.max_kz_norm <= 1e-4);
}

TEST_CASE("position_feedback") {
  const SatConfig sat{6.0, 8.0};
  const PositionGains gains = fixture_gains(sat);
  CHECK(position_feedback(gains, sat, Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()).norm() ==
        0.0);

  SUBCASE("exactly linear inside the saturation ball") {
    const Eigen::Vector3d p(0.2, -0.1, 0.4), v(0.05, 0.0, -0.1);
    Vector6 z;
    z << p, v;
    REQUIRE((gains.K * z).norm() < sat.b);
    CHECK((position_feedback(gains, sat, p, v) - gains.K * z).norm() == 0.0);
  }

  SUBCASE("bounded by b_max for large errors") {
    // The tanh blend approaches b_max from below; at double precision it
    // clamps exactly there, which still sits strictly below |g| - M2.
    const Eigen::Vector3d p(500.0, -300.0, 100.0), v(50.0, 80.0, 0.0);
    CHECK(position_feedback(gains, sat, p, v).norm() <= sat.b_max);
    const Eigen::Vector3d moderate(0.0, 12.0, 0.0);
    CHECK(saturation(sat, moderate).norm() < sat.b_max);
  }
}

TEST_CASE("saturation never activates from the bounding ellipsoid") {
  // The position subsystem alone: zdot = (v_tilde, Sat(K z)). Solutions from
  // Omega_H(1) keep |K z| <= b.
  const SatConfig sat{6.0, 8.0};
  const PositionGains gains = fixture_gains(sat);
  const Matrix6 h = fixture_h();

  HybridSystemDef sys;
  sys.flow_field = [&gains, &sat](double, const Vector& s) {
    Vector ds(6);
    Vector6 z = s;
    ds.head(3) = z.tail<3>();
    ds.tail(3) = saturation(sat, gains.K * z);
    return ds;
  };
  sys.jump_margin = [](double, const Vector&) { return -1.0; };
  sys.jump_map = [](double, const Vector& s) { return s; };

  SolverConfig solver;
  solver.step = 1e-3;
  solver.max_time = 20.0;
  solver.record_stride = 10;

  std::mt19937_64 eng(77);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    Vector6 dir;
    for (int i = 0; i < 6; ++i) dir[i] = gauss(eng);
    const double scale = std::pow(std::uniform_real_distribution<double>(0.0, 1.0)(eng), 1.0 / 6.0);
    Vector6 z0 = dir * (scale / std::sqrt(dir.dot(h * dir)));  // inside Omega_H(1)
    REQUIRE(z0.dot(h * z0) <= 1.0 + 1e-12);

    const HybridArc arc = solve(sys, Vector(z0), solver);
    double max_kz = 0.0;
    for (const Phase& ph : arc.phases) {
      for (const Sample& s : ph.samples) {
        max_kz = std::max(max_kz, (gains.K * Vector6(s.state)).norm());
      }
    }
    CHECK(max_kz <= sat.b + 1e-9);
    CHECK(Vector6(arc.last().state).norm() <= 1e-2);  // settled
  }
}

TEST_CASE("thrust magnitude stays positive and bounded after the transient") {
  QuadParams params;
  const PotentialConfig cfg = body_cfg();
  const SatConfig sat{6.0, 8.0};
  const PositionGains gains = fixture_gains(sat);
  CircleReference ref{0.2};
  SolverConfig solver;
  solver.max_time = 8.0;
  solver.record_stride = 10;
  const HybridArc arc =
      simulate_tracking(params, gains, cfg, sat, 1.0, 1.0, ref, upside_down_initial(ref), solver);

  const double headroom = params.gravity.norm() - ref.m2() - sat.b_max;  // ~0.23
  REQUIRE(headroom > 0.0);
  for (const Phase& ph : arc.phases) {
    for (const Sample& s : ph.samples) {
      const QuadFullState q = unpack_quad_state(s.state);
      const ReferenceSample rs = reference_eval(ref, s.t);
      const Eigen::Vector3d w = position_feedback(gains, sat, q.p - rs.p, q.v - rs.v);
      CHECK((w - params.gravity + rs.a).norm() >= headroom - 1e-12);
      if (s.t >= 1.0) {
        const QuadDerived d = quad_derived(params, gains, cfg, sat, ref, s.t, s.state);
        CHECK(d.kappa_u > 0.0);
        CHECK(d.kappa_u <= params.gravity.norm() + ref.m2() + sat.b_max);
      }
    }
  }
}

TEST_CASE("pack/unpack round trip") {
  CircleReference ref{0.2};
  const QuadFullState s = upside_down_initial(ref);
  const QuadFullState t = unpack_quad_state(pack_quad_state(s));
  CHECK((s.p - t.p).norm() == 0.0);
  CHECK((s.v - t.v).norm() == 0.0);
  CHECK((s.R.matrix() - t.R.matrix()).norm() == 0.0);
  CHECK((s.y.coords() - t.y.coords()).norm() == 0.0);
}
