// Acceptance suite: desk-scale numeric checks of every closed-form claim the
// library implements, printed one line per criterion. Exit code = number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "synctl/kernels.hpp"
#include "synctl/quad.hpp"
#include "synctl/riccati.hpp"
#include "synctl/stabilizer.hpp"

using namespace synctl;

namespace {

const UnitVector kUp{0.0, 0.0, 1.0};
const UnitVector kDown{0.0, 0.0, -1.0};

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Check {
  std::ostringstream detail;
  bool ok = true;

  template <typename T>
  void require(bool cond, const char* label, T observed) {
    detail << (detail.tellp() > 0 ? ", " : "") << label << " = " << observed;
    if (!cond) {
      ok = false;
      detail << " [VIOLATED]";
    }
  }
};

std::vector<Vector> tangent_basis(const Vector& x) {
  std::vector<Vector> dirs;
  for (int i = 0; i < x.size() && dirs.size() < 2; ++i) {
    Vector d = Vector::Unit(x.size(), i) - x * x[i];
    for (const Vector& prev : dirs) d -= prev * prev.dot(d);
    if (d.norm() > 1e-6) dirs.push_back(d.normalized());
  }
  return dirs;
}

// 1. Synergy-gap minimum over a >= 20000-point grid on Y.
Outcome criterion1(const PotentialConfig& cfg) {
  Check c;
  const auto grid = kernels::fibonacci_cap(cfg.r, cfg.gamma, 20000);
  const double got = kernels::min_sticky_gap(cfg, grid, Exec::parallel);
  c.require(std::abs(got - 0.2) <= 5e-3, "grid min mu(x,x)", got);
  c.detail << " (closed form " << cfg.min_synergy_gap() << ")";
  return {c.ok, c.detail.str()};
}

// 2. Exponential constants and the sandwich on 1e6 samples.
Outcome criterion2(const PotentialConfig& cfg, const ExpConstants& ec, const PropertyReport& rep) {
  Check c;
  c.require(std::abs(ec.alpha_up - 0.5) <= 1e-15, "alpha_up", ec.alpha_up);
  c.require(std::abs(ec.alpha_low - 1.0 / 6.0) <= 1e-15, "alpha_low", ec.alpha_low);
  const PropertyCheck& sandwich = rep.checks[3];
  c.require(sandwich.violations == 0, "sandwich violations", sandwich.violations);
  c.detail << " on " << sandwich.samples << " samples";
  return {c.ok, c.detail.str()};
}

// 3. Gradient vs central finite differences; norm identity.
Outcome criterion3(const PotentialConfig& cfg) {
  Check c;
  const auto xs = kernels::random_sphere(3, 1000, 101);
  const auto ys = kernels::random_cap(cfg.r, cfg.gamma, 1000, 102);
  double worst_rel = 0.0, worst_norm = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const Vector& x = xs[i].coords();
    const Vector g = grad_potential(cfg, xs[i], ys[i]);
    const Vector proj = g - x * x.dot(g);
    double err_sq = 0.0;
    for (const Vector& d : tangent_basis(x)) {
      const double h = 1e-6;
      const double vp = potential(cfg, UnitVector(Vector((x + h * d).normalized())), ys[i]);
      const double vm = potential(cfg, UnitVector(Vector((x - h * d).normalized())), ys[i]);
      const double fd = (vp - vm) / (2.0 * h);
      err_sq += std::pow(fd - g.dot(d), 2);
    }
    worst_rel = std::max(worst_rel, std::sqrt(err_sq) / std::max(proj.norm(), 1e-8));
    worst_norm = std::max(worst_norm,
                          std::abs(tangent_grad_norm_sq(cfg, xs[i], ys[i]) - proj.squaredNorm()));
  }
  c.require(worst_rel < 1e-5, "max FD rel err", worst_rel);
  c.require(worst_norm <= 1e-10, "max norm-identity err", worst_norm);
  return {c.ok, c.detail.str()};
}

// 4. Argmin vs brute-force grid minimization.
Outcome criterion4(const PotentialConfig& cfg) {
  Check c;
  const auto ygrid = kernels::fibonacci_cap(cfg.r, cfg.gamma, 5000);
  const auto xs = kernels::random_sphere(3, 500, 103);
  double worst_gap = 0.0, worst_neg = 0.0, worst_exact = 0.0, worst_boundary = 0.0;
  for (const UnitVector& x : xs) {
    double brute = std::numeric_limits<double>::infinity();
    for (const UnitVector& y : ygrid) brute = std::min(brute, potential(cfg, x, y));
    const double closed = min_over_y(cfg, x);
    worst_gap = std::max(worst_gap, brute - closed);
    worst_neg = std::max(worst_neg, closed - brute);
    const UnitVector ystar = argmin_over_y(cfg, x);
    worst_exact = std::max(worst_exact, std::abs(potential(cfg, x, ystar) - closed));
    const double v = cfg.r.dot(x);
    if (v < -cfg.gamma - 1e-9) {
      worst_boundary = std::max(worst_boundary, std::abs(cfg.r.dot(ystar) - cfg.gamma));
    }
  }
  c.require(worst_gap <= 1e-3, "max grid-vs-closed-form gap", worst_gap);
  c.require(worst_neg <= 1e-12, "max closed-form excess", worst_neg);
  c.require(worst_exact <= 1e-12, "max V(x, argmin) mismatch", worst_exact);
  c.require(worst_boundary <= 1e-9, "max boundary-branch |r^T y - gamma|", worst_boundary);
  return {c.ok, c.detail.str()};
}

// 5. Closed-loop decay on S^2 from 100 initial conditions.
Outcome criterion5(const PotentialConfig& cfg, const ExpConstants& ec) {
  Check c;
  SolverConfig solver;
  solver.step = 1e-3;
  solver.max_time = 100.0;
  solver.record_stride = 100;

  std::vector<std::pair<UnitVector, UnitVector>> ics;
  ics.emplace_back(kUp.negated(), cfg.boundary_tiebreak());  // mu = 0, zero jumps expected
  ics.emplace_back(kUp.negated(), kDown);                    // x = y = -r, branch (d) jump
  {
    const auto xy = kernels::random_cap(cfg.r, cfg.gamma, 3, 104);
    for (const auto& p : xy) ics.emplace_back(p, p);  // sticky set, jump guaranteed
  }
  {
    const auto xs = kernels::random_sphere(3, 95, 105);
    const auto ys = kernels::random_cap(cfg.r, cfg.gamma, 95, 106);
    for (int i = 0; i < 95; ++i) ics.emplace_back(xs[i], ys[i]);
  }

  const auto arcs = simulate_batch(cfg, ics, solver, Exec::parallel);
  double worst_dist = 0.0, worst_drop_deficit = 0.0;
  int max_jumps = 0;
  bool monotone = true, envelope = true, distance_bound = true;
  double lambda_emp_min = std::numeric_limits<double>::infinity();
  for (const HybridArc& arc : arcs) {
    const DecayReport rep = check_exponential_decay(arc, cfg, ec);
    worst_dist = std::max(worst_dist, rep.final_distance);
    monotone = monotone && rep.flow_monotone;
    envelope = envelope && rep.envelope_ok;
    distance_bound = distance_bound && rep.distance_bound_ok;
    max_jumps = std::max(max_jumps, arc.jump_count());
    if (arc.jump_count() > 0) {
      worst_drop_deficit = std::max(worst_drop_deficit, cfg.delta - rep.min_jump_drop);
    }
    if (!rep.vacuous && std::isfinite(rep.lambda_emp)) {
      lambda_emp_min = std::min(lambda_emp_min, rep.lambda_emp);
    }
  }
  c.require(worst_dist < 1e-6, "max final distance", worst_dist);
  c.require(monotone, "V monotone in flows", monotone);
  c.require(worst_drop_deficit <= 1e-9, "max jump-drop deficit vs delta", worst_drop_deficit);
  c.require(max_jumps <= 1, "max jumps per solution", max_jumps);
  c.require(envelope, "V envelope", envelope);
  c.require(distance_bound, "distance envelope", distance_bound);
  c.detail << "; min fitted lambda_emp = " << lambda_emp_min << " vs conservative lambda = "
           << ec.lambda << " (reported, no tolerance per spec)";
  return {c.ok, c.detail.str()};
}

// 6. Post-jump path length equals the minimal geodesic length.
Outcome criterion6(const PotentialConfig& cfg) {
  Check c;
  SolverConfig solver;
  solver.step = 1e-3;
  solver.max_time = 30.0;
  solver.record_stride = 1;

  std::vector<std::pair<UnitVector, UnitVector>> ics;
  ics.emplace_back(kUp.negated(), kDown);  // antipodal through branch (d)
  {
    // Jump-set starts: x0 in Y paired with y0 = x0 gives mu >= 0.2 > delta.
    const auto xs = kernels::random_cap(cfg.r, cfg.gamma, 30, 107);
    for (const auto& x : xs) ics.emplace_back(x, x);
  }
  {
    // Upper-hemisphere starts paired with a boundary point beneath them.
    const auto xs = kernels::random_sphere(3, 40, 108);
    for (const auto& x : xs) {
      if (ics.size() >= 50) break;
      Vector side = x.coords() - cfg.r.coords() * cfg.r.dot(x);
      if (side.norm() < 1e-6) continue;
      side.normalize();
      const UnitVector y(cfg.gamma * cfg.r.coords() +
                         std::sqrt(1.0 - cfg.gamma * cfg.gamma) * side);
      if (synergy_gap(cfg, x, y) >= cfg.delta) ics.emplace_back(x, y);
    }
  }

  double worst = 0.0;
  int tested = 0;
  for (std::size_t i = 0; i < ics.size(); i += 10) {
    const std::size_t hi = std::min(ics.size(), i + 10);
    const std::span<const std::pair<UnitVector, UnitVector>> chunk(ics.data() + i, hi - i);
    const auto arcs = simulate_batch(cfg, chunk, solver, Exec::parallel);
    for (const HybridArc& arc : arcs) {
      const GeodesicReport rep = check_geodesic(arc, cfg);
      worst = std::max(worst, rep.abs_diff);
      ++tested;
    }
  }
  c.require(worst <= 1e-3, "max |path length - arccos(x0^T r)|", worst);
  c.detail << " over " << tested << " jump-set starts";
  return {c.ok, c.detail.str()};
}

// 7. CARE solver and gain synthesis certificates.
Outcome criterion7(const PotentialConfig& body_cfg) {
  Check c;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(6, 6);
  a.topRightCorner(3, 3).setIdentity();
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(6, 3);
  b.bottomRows(3).setIdentity();
  const Eigen::MatrixXd p = care_solve(a, b, Eigen::MatrixXd::Identity(6, 6),
                                       Eigen::MatrixXd::Identity(3, 3));
  Eigen::MatrixXd expected(6, 6);
  expected << std::sqrt(3.0) * Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Identity(3, 3),
      Eigen::MatrixXd::Identity(3, 3), std::sqrt(3.0) * Eigen::MatrixXd::Identity(3, 3);
  c.require((p - expected).norm() <= 1e-9, "|P - analytic|", (p - expected).norm());
  const double residual =
      (a.transpose() * p + p * a - p * b * b.transpose() * p + Eigen::MatrixXd::Identity(6, 6))
          .norm();
  c.require(residual < 1e-10, "CARE residual", residual);

  Matrix6 h = Matrix6::Zero();
  h.diagonal() << 500, 500, 500, 100, 100, 100;
  Matrix6 q0 = Matrix6::Zero();
  q0.diagonal() << 10, 10, 100, 100, 100, 1;
  const PositionGains gains = synthesize_gains(h, 10.0 * Eigen::Matrix3d::Identity(), q0,
                                               SatConfig{}, 12.0, 1.0, body_cfg);
  c.require(gains.info.qr_residual_max_eig <= 1e-8, "Riccati-inequality max eig", gains.info.qr_residual_max_eig);
  c.require(gains.info.ph_min_eig >= -1e-10, "ellipsoid containment min eig", gains.info.ph_min_eig);
  c.require(gains.info.sv_sq <= gains.info.sv_budget, "singular-value budget slack",
            gains.info.sv_budget - gains.info.sv_sq);
  return {c.ok, c.detail.str()};
}

// 8. Quadrotor upside-down recovery, the paper's simulation scenario.
Outcome criterion8(const PotentialConfig& body_cfg) {
  Check c;
  QuadParams params;
  const SatConfig sat{};
  const CircleReference ref{};
  Matrix6 h = Matrix6::Zero();
  h.diagonal() << 500, 500, 500, 100, 100, 100;
  Matrix6 q0 = Matrix6::Zero();
  q0.diagonal() << 10, 10, 100, 100, 100, 1;
  const PositionGains gains =
      synthesize_gains(h, 10.0 * Eigen::Matrix3d::Identity(), q0, sat, 12.0, 1.0, body_cfg);
  const ReferenceSample r0 = reference_eval(ref, 0.0);
  const QuadFullState initial{r0.p, r0.v,
                              Rotation(Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal()),
                              UnitVector{0.0, 0.0, 1.0}};
  SolverConfig solver;
  solver.step = 1e-3;
  solver.max_time = 8.0;
  solver.record_stride = 10;
  const HybridArc arc =
      simulate_tracking(params, gains, body_cfg, sat, 1.0, 1.0, ref, initial, solver);

  const bool jump_at_zero = arc.phases.size() >= 2 && arc.phases[0].samples.size() == 1 &&
                            arc.phases[0].samples[0].t == 0.0;
  c.require(jump_at_zero, "jump at t=0", jump_at_zero);
  if (!jump_at_zero) return {false, c.detail.str()};

  Vector ytarget(3);
  ytarget << std::sqrt(3.0) / 2.0, 0.0, 0.5;
  const double ydist = (arc.phases[1].samples.front().state.segment<3>(15) - ytarget).norm();
  c.require(ydist <= 1e-2, "|y+ - (sqrt3/2,0,0.5)|", ydist);

  const QuadDerived pre =
      quad_derived(params, gains, body_cfg, sat, ref, 0.0, arc.phases[0].samples[0].state);
  const QuadDerived post =
      quad_derived(params, gains, body_cfg, sat, ref, 0.0, arc.phases[1].samples[0].state);
  c.require(post.v1 < pre.v1, "V1 drop at the jump", pre.v1 - post.v1);

  const TrackingMetrics m = tracking_metrics(arc, params, gains, body_cfg, sat, ref, 12.0);
  c.require(m.final_pos_err < 1e-2, "|p_err(8)|", m.final_pos_err);
  c.require(m.sat_bound_ok, "max |Kz|", m.max_kz_norm);
  return {c.ok, c.detail.str()};
}

// 9. Denominator bounds on 1e6 samples.
Outcome criterion9(const PotentialConfig& cfg, const PropertyReport& rep) {
  Check c;
  const PropertyCheck& denom = rep.checks[2];
  c.require(denom.violations == 0, "violations", denom.violations);
  c.require(std::abs(cfg.denom_lo() - 1.0) <= 1e-12, "lower bound", cfg.denom_lo());
  c.require(std::abs(cfg.denom_hi() - 3.0) <= 1e-12, "upper bound", cfg.denom_hi());
  c.detail << ", observed [" << denom.observed_lo << ", " << denom.observed_hi << "] on "
           << denom.samples << " samples";
  return {c.ok, c.detail.str()};
}

// 10. Hybrid-engine oracle equivalence on linear toys.
Outcome criterion10() {
  Check c;
  SolverConfig solver;
  solver.step = 1e-3;
  solver.event_tol = 1e-9;

  {
    HybridSystemDef sys;
    sys.flow_field = [](double, const Vector& s) { return Vector(-s); };
    sys.jump_margin = [](double, const Vector&) { return -1.0; };
    sys.jump_map = [](double, const Vector& s) { return s; };
    SolverConfig cfg = solver;
    cfg.max_time = 1.0;
    Vector x0(1);
    x0 << 1.0;
    const HybridArc arc = solve(sys, x0, cfg);
    c.require(std::abs(arc.last().state[0] - std::exp(-1.0)) <= 1e-8, "|x(1) - e^-1|",
              std::abs(arc.last().state[0] - std::exp(-1.0)));
  }
  {
    HybridSystemDef sys;
    sys.flow_field = [](double, const Vector& s) { return Vector(Vector::Ones(s.size())); };
    sys.jump_margin = [](double, const Vector& s) { return s[0] - 1.0; };
    sys.jump_map = [](double, const Vector& s) { return Vector(Vector::Zero(s.size())); };
    SolverConfig cfg = solver;
    cfg.max_time = 2.5;
    Vector x0(1);
    x0 << 0.0;
    const HybridArc arc = solve(sys, x0, cfg);
    c.require(arc.jump_count() == 2, "sawtooth jumps", arc.jump_count());
    if (arc.jump_count() == 2) {
      c.require(std::abs(arc.phases[0].samples.back().t - 1.0) <= cfg.event_tol + 1e-12,
                "|t1 - 1|", std::abs(arc.phases[0].samples.back().t - 1.0));
      c.require(std::abs(arc.phases[1].samples.back().t - 2.0) <= 2 * cfg.event_tol + 1e-12,
                "|t2 - 2|", std::abs(arc.phases[1].samples.back().t - 2.0));
    }
  }
  return {c.ok, c.detail.str()};
}

}  // namespace

int main() {
  const PotentialConfig cfg(kUp, 1.0, -0.5, 0.1);
  const PotentialConfig body(kDown, 1.0, -0.5, 0.1);

  int failures = 0;
  const auto run_one = [&failures](int id, const char* label, double budget_s,
                                   const std::function<Outcome()>& fn) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = fn();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = out.pass;
    std::string note;
    if (budget_s > 0.0 && secs > budget_s) {
      pass = false;
      note = " [over the " + std::to_string(budget_s) + " s budget]";
    }
    std::printf("[%s] %2d. %s: %s (%.2f s)%s\n", pass ? "PASS" : "FAIL", id, label,
                out.detail.c_str(), secs, note.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  };

  // Shared heavy artifacts: the 1e6-sample property suite and the flow-set
  // maximization feed criteria 2 and 9.
  const ExpConstants ec = exp_constants(cfg);
  const PropertyReport props = verify_potential_properties(cfg, 1'000'000, 0, Exec::parallel);

  run_one(1, "synergy-gap minimum over Y", 10.0, [&] { return criterion1(cfg); });
  run_one(2, "exponential constants + sandwich bounds", 0.0,
          [&] { return criterion2(cfg, ec, props); });
  run_one(3, "gradient correctness", 0.0, [&] { return criterion3(cfg); });
  run_one(4, "argmin correctness", 0.0, [&] { return criterion4(cfg); });
  run_one(5, "closed-loop decay on S^2", 0.0, [&] { return criterion5(cfg, ec); });
  run_one(6, "geodesic minimality", 0.0, [&] { return criterion6(cfg); });
  run_one(7, "CARE solver + gain certificates", 5.0, [&] { return criterion7(body); });
  run_one(8, "quadrotor upside-down recovery", 60.0, [&] { return criterion8(body); });
  run_one(9, "denominator bounds", 0.0, [&] { return criterion9(cfg, props); });
  run_one(10, "hybrid-engine oracle equivalence", 0.0, [] { return criterion10(); });

  if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
  return failures;
}
