#include "synctl/hybrid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "synctl/errors.hpp"

namespace synctl {

void SolverConfig::validate() const {
  if (!(step > 0.0)) throw std::invalid_argument("solver.step must be positive");
  if (!(event_tol > 0.0 && event_tol < step)) {
    throw std::invalid_argument("solver.event_tol must lie in (0, step)");
  }
  if (!(max_time > 0.0)) throw std::invalid_argument("solver.max_time must be positive");
  if (max_jumps < 1) throw std::invalid_argument("solver.max_jumps must be >= 1");
  if (!(margin_tol >= 0.0)) throw std::invalid_argument("solver.margin_tol must be >= 0");
  if (record_stride < 1) throw std::invalid_argument("solver.record_stride must be >= 1");
}

std::size_t HybridArc::sample_count() const {
  std::size_t n = 0;
  for (const auto& p : phases) n += p.samples.size();
  return n;
}

void HybridArc::check_invariants() const {
  if (phases.empty()) throw std::logic_error("HybridArc: no phases");
  for (std::size_t pi = 0; pi < phases.size(); ++pi) {
    const Phase& p = phases[pi];
    if (p.samples.empty()) throw std::logic_error("HybridArc: empty phase");
    if (p.jump_index != static_cast<int>(pi)) throw std::logic_error("HybridArc: jump index gap");
    for (std::size_t si = 1; si < p.samples.size(); ++si) {
      if (p.samples[si].t < p.samples[si - 1].t) throw std::logic_error("HybridArc: time decreases");
    }
    if (pi > 0 && p.samples.front().t != phases[pi - 1].samples.back().t) {
      throw std::logic_error("HybridArc: jump changes continuous time");
    }
  }
}

namespace {

Vector rk4_step(const std::function<Vector(double, const Vector&)>& f, double t, const Vector& s,
                double h) {
  const Vector k1 = f(t, s);
  const Vector k2 = f(t + 0.5 * h, s + (0.5 * h) * k1);
  const Vector k3 = f(t + 0.5 * h, s + (0.5 * h) * k2);
  const Vector k4 = f(t + h, s + h * k3);
  return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void ensure_finite(const Vector& s, double t) {
  if (!s.allFinite()) {
    throw NonFiniteState("solve: non-finite state component at t = " + std::to_string(t));
  }
}

}  // namespace

std::pair<double, Vector> event_locate(
    const std::function<Vector(const Vector&, double, double)>& advance,
    const std::function<double(double, const Vector&)>& margin, const Vector& state_lo,
    const Vector& state_hi, double t_lo, double t_hi, double tol, double margin_tol) {
  if (!(t_lo < t_hi)) throw NoBracket("event_locate: t_lo must precede t_hi");
  if (!(margin(t_lo, state_lo) < 0.0)) {
    throw NoBracket("event_locate: margin already >= 0 at t_lo");
  }
  if (!(margin(t_hi, state_hi) >= 0.0)) {
    throw NoBracket("event_locate: margin still < 0 at t_hi");
  }
  const double span = t_hi - t_lo;
  double a = 0.0, b = 1.0;
  Vector sb = state_hi;
  double mb = margin(t_hi, state_hi);
  for (int it = 0; it < 120; ++it) {
    if ((b - a) * span <= tol && std::abs(mb) <= margin_tol) break;
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;  // bisection hit double-precision floor
    const Vector sm = advance(state_lo, t_lo, mid * span);
    const double mm = margin(t_lo + mid * span, sm);
    if (mm >= 0.0) {
      b = mid;
      sb = sm;
      mb = mm;
    } else {
      a = mid;
    }
  }
  return {t_lo + b * span, sb};
}

HybridArc solve(const HybridSystemDef& sys, const Vector& x0, const SolverConfig& cfg) {
  cfg.validate();
  if (!sys.jump_margin || !sys.jump_map) {
    throw std::invalid_argument("solve: jump_margin and jump_map are required");
  }
  if (!sys.flow_step && !sys.flow_field) {
    throw std::invalid_argument("solve: need flow_field or a custom flow_step");
  }

  auto advance = [&sys](const Vector& s, double t, double h) {
    Vector out = sys.flow_step ? sys.flow_step(t, s, h) : rk4_step(sys.flow_field, t, s, h);
    if (sys.post_step_projection) out = sys.post_step_projection(out);
    return out;
  };

  ensure_finite(x0, 0.0);
  {
    const double m0 = sys.jump_margin(0.0, x0);
    if (!std::isfinite(m0)) throw std::invalid_argument("solve: jump_margin(x0) is not finite");
  }

  HybridArc arc;
  arc.phases.push_back(Phase{0, {Sample{0.0, x0}}});
  double t = 0.0;
  Vector s = x0;
  int jumps = 0;
  int steps_since_record = 0;

  auto record = [&arc](double tt, const Vector& ss) {
    Phase& ph = arc.phases.back();
    if (!ph.samples.empty() && ph.samples.back().t == tt &&
        ph.samples.back().state.size() == ss.size() &&
        (ph.samples.back().state.array() == ss.array()).all()) {
      return;  // already recorded
    }
    ph.samples.push_back(Sample{tt, ss});
  };

  auto do_jump = [&]() -> bool {
    // Returns false when the jump budget stops the run.
    if (jumps >= cfg.max_jumps) {
      if (t < 0.01 * cfg.max_time) {
        throw ZenoSuspected("solve: " + std::to_string(jumps) + " jumps before t = " +
                            std::to_string(t) + " (< 1% of max_time)");
      }
      return false;
    }
    record(t, s);  // pre-jump state closes the phase
    s = sys.jump_map(t, s);
    ensure_finite(s, t);
    ++jumps;
    arc.phases.push_back(Phase{jumps, {Sample{t, s}}});
    steps_since_record = 0;
    return true;
  };

  // Jump-before-flow at initialization when x0 is in D.
  if (sys.jump_margin(t, s) >= 0.0) {
    if (!do_jump()) return arc;
  }

  while (t < cfg.max_time) {
    // Flow priority inside the margin_tol band; beyond it the state is in D.
    if (sys.jump_margin(t, s) > cfg.margin_tol) {
      if (!do_jump()) break;
      continue;
    }
    const double h = std::min(cfg.step, cfg.max_time - t);
    if (h < 1e-15) break;
    Vector snext = advance(s, t, h);
    ensure_finite(snext, t + h);

    if (sys.jump_margin(t + h, snext) > cfg.margin_tol) {
      if (sys.jump_margin(t, s) < 0.0) {
        auto [tstar, sstar] = event_locate(advance, sys.jump_margin, s, snext, t, t + h,
                                           cfg.event_tol, cfg.margin_tol);
        t = tstar;
        s = sstar;
      }
      // else: already within the tolerance band at t; jump from here.
      if (!do_jump()) break;
      continue;
    }

    t += h;
    s = std::move(snext);
    if (++steps_since_record >= cfg.record_stride) {
      record(t, s);
      steps_since_record = 0;
    }
  }

  record(t, s);
  return arc;
}

}  // namespace synctl
