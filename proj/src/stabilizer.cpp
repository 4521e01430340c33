#include "synctl/stabilizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "synctl/errors.hpp"

#ifdef SYNCTL_HAVE_OPENMP
#include <omp.h>
#endif

namespace synctl {

Vector controller_output(const PotentialConfig& cfg, const ClosedLoopState& s, double margin_tol) {
  const double mu = synergy_gap(cfg, s.x, s.y);
  if (mu > cfg.delta + margin_tol) {
    throw NotInFlowSet("controller_output: mu = " + std::to_string(mu) + " exceeds delta = " +
                       std::to_string(cfg.delta));
  }
  return -grad_potential(cfg, s.x, s.y);
}

bool should_jump(const PotentialConfig& cfg, const ClosedLoopState& s) {
  return synergy_gap(cfg, s.x, s.y) >= cfg.delta;
}

ClosedLoopState jump_update(const PotentialConfig& cfg, const ClosedLoopState& s) {
  return ClosedLoopState{s.x, argmin_over_y(cfg, s.x)};
}

Vector pack_loop_state(const ClosedLoopState& s) {
  const int m = s.x.ambient_dim();
  Vector packed(2 * m);
  packed.head(m) = s.x.coords();
  packed.tail(m) = s.y.coords();
  return packed;
}

ClosedLoopState unpack_loop_state(const Vector& packed) {
  const int m = static_cast<int>(packed.size()) / 2;
  return ClosedLoopState{UnitVector(packed.head(m)), UnitVector(packed.tail(m))};
}

HybridSystemDef sphere_loop_system(const PotentialConfig& cfg) {
  const int m = cfg.r.ambient_dim();
  HybridSystemDef sys;
  sys.flow_field = [cfg, m](double, const Vector& s) {
    Vector ds = Vector::Zero(s.size());
    const auto x = s.head(m);
    const auto y = s.tail(m);
    Vector g = detail::grad_raw(cfg, x, y);
    ds.head(m) = -(g - x * x.dot(g));  // ydot = 0
    return ds;
  };
  sys.jump_margin = [cfg, m](double, const Vector& s) {
    return detail::synergy_gap_raw(cfg, s.head(m), s.tail(m)) - cfg.delta;
  };
  sys.jump_map = [cfg, m](double, const Vector& s) {
    Vector out = s;
    out.tail(m) = detail::argmin_raw(cfg, s.head(m));
    return out;
  };
  sys.post_step_projection = [m](const Vector& s) {
    Vector out = s;
    out.head(m) /= out.head(m).norm();
    return out;
  };
  return sys;
}

HybridArc simulate(const PotentialConfig& cfg, const UnitVector& x0, const UnitVector& y0,
                   const SolverConfig& solver) {
  if (!cfg.in_logic_set(y0)) {
    throw LogicVarOutsideY("simulate: y0 with r^T y0 = " + std::to_string(cfg.r.dot(y0)) +
                           " lies outside Y (gamma = " + std::to_string(cfg.gamma) + ")");
  }
  return solve(sphere_loop_system(cfg), pack_loop_state(ClosedLoopState{x0, y0}), solver);
}

std::vector<HybridArc> simulate_batch(const PotentialConfig& cfg,
                                      std::span<const std::pair<UnitVector, UnitVector>> initial,
                                      const SolverConfig& solver, Exec exec) {
  std::vector<HybridArc> arcs(initial.size());
  const auto n = static_cast<long long>(initial.size());
  const int nt = max_threads(exec);
  if (nt <= 1) {
    for (long long i = 0; i < n; ++i) {
      arcs[static_cast<std::size_t>(i)] =
          simulate(cfg, initial[static_cast<std::size_t>(i)].first,
                   initial[static_cast<std::size_t>(i)].second, solver);
    }
    return arcs;
  }
#ifdef SYNCTL_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(nt)
  for (long long i = 0; i < n; ++i) {
    arcs[static_cast<std::size_t>(i)] =
        simulate(cfg, initial[static_cast<std::size_t>(i)].first,
                 initial[static_cast<std::size_t>(i)].second, solver);
  }
#endif
  return arcs;
}

namespace {

double potential_at(const PotentialConfig& cfg, const Vector& packed) {
  const int m = cfg.r.ambient_dim();
  return detail::potential_raw(cfg, packed.head(m), packed.tail(m));
}

}  // namespace

DecayReport check_exponential_decay(const HybridArc& arc, const PotentialConfig& cfg,
                                    const ExpConstants& constants) {
  if (arc.phases.empty()) throw std::invalid_argument("check_exponential_decay: empty arc");
  const int m = cfg.r.ambient_dim();

  DecayReport rep;
  rep.lambda_bound = constants.lambda;
  rep.min_jump_drop = std::numeric_limits<double>::infinity();
  rep.envelope_ok = true;
  rep.distance_bound_ok = true;
  rep.flow_monotone = true;

  const Vector& s0 = arc.first().state;
  const double v00 = potential_at(cfg, s0);
  const double d0 = (s0.head(m) - cfg.r.coords()).norm();
  rep.vacuous = v00 < 1e-30;
  const double ratio = std::sqrt(constants.alpha_up / constants.alpha_low);

  // Regression accumulators for log V(t); the cutoff keeps the fit away from
  // the floating-point floor that V hits once |x - r| reaches machine scale.
  double st = 0.0, sv = 0.0, stt = 0.0, stv = 0.0;
  long long nfit = 0;
  constexpr double kFitCutoff = 1e-24;

  for (std::size_t pi = 0; pi < arc.phases.size(); ++pi) {
    const Phase& ph = arc.phases[pi];
    double vprev = std::numeric_limits<double>::infinity();
    for (const Sample& smp : ph.samples) {
      const double v = potential_at(cfg, smp.state);
      if (!rep.vacuous) {
        if (v > v00 * std::exp(-(constants.lambda - 1e-6) * smp.t)) rep.envelope_ok = false;
        const double dist = (smp.state.head(m) - cfg.r.coords()).norm();
        if (dist > ratio * std::exp(-0.5 * constants.lambda * smp.t) * d0 * (1.0 + 1e-6)) {
          rep.distance_bound_ok = false;
        }
      }
      if (v > vprev + 1e-9) rep.flow_monotone = false;
      vprev = v;
      if (v > kFitCutoff) {
        const double lv = std::log(v);
        st += smp.t;
        sv += lv;
        stt += smp.t * smp.t;
        stv += smp.t * lv;
        ++nfit;
      }
    }
    if (pi + 1 < arc.phases.size()) {
      const double vpre = potential_at(cfg, ph.samples.back().state);
      const double vpost = potential_at(cfg, arc.phases[pi + 1].samples.front().state);
      rep.min_jump_drop = std::min(rep.min_jump_drop, vpre - vpost);
    }
  }

  if (rep.vacuous || nfit < 2) {
    rep.lambda_emp = std::numeric_limits<double>::quiet_NaN();
  } else {
    const double den = nfit * stt - st * st;
    rep.lambda_emp = den > 0.0 ? -(nfit * stv - st * sv) / den : std::numeric_limits<double>::quiet_NaN();
  }
  rep.final_distance = (arc.last().state.head(m) - cfg.r.coords()).norm();
  return rep;
}

DecayReport check_exponential_decay(const HybridArc& arc, const PotentialConfig& cfg) {
  return check_exponential_decay(arc, cfg, exp_constants(cfg));
}

GeodesicReport check_geodesic(const HybridArc& arc, const PotentialConfig& cfg) {
  if (arc.phases.size() < 2 || arc.phases.front().samples.size() != 1 ||
      arc.phases.front().samples.front().t != 0.0) {
    throw NotAJumpStart("check_geodesic: arc does not begin with a jump at t = 0");
  }
  const int m = cfg.r.ambient_dim();
  std::vector<UnitVector> xs;
  xs.reserve(arc.sample_count());
  for (std::size_t pi = 1; pi < arc.phases.size(); ++pi) {
    for (const Sample& smp : arc.phases[pi].samples) {
      xs.emplace_back(Vector(smp.state.head(m)));
    }
  }
  GeodesicReport rep;
  rep.path_len = path_length(xs);
  rep.geodesic_dist = geodesic_distance(UnitVector(Vector(arc.first().state.head(m))), cfg.r);
  rep.abs_diff = std::abs(rep.path_len - rep.geodesic_dist);
  return rep;
}

}  // namespace synctl
