#include "synctl/potential.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "synctl/errors.hpp"
#include "synctl/kernels.hpp"

namespace synctl {

PotentialConfig::PotentialConfig(UnitVector r_, double k_, double gamma_, double delta_)
    : r(std::move(r_)), k(k_), gamma(gamma_), delta(delta_) {
  if (!(k > 0.0)) {
    throw std::invalid_argument("k must be positive, got " + std::to_string(k));
  }
  if (!(gamma > -1.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must lie in (-1, 1), got " + std::to_string(gamma));
  }
  const double gap = (1.0 + gamma) / (2.0 / k + 1.0 + gamma);
  if (!(delta > 0.0 && delta < gap)) {
    std::ostringstream os;
    os << "delta must lie in (0, " << gap << ") = (0, (1+gamma)/(2/k+1+gamma)), got " << delta;
    throw std::invalid_argument(os.str());
  }
}

double PotentialConfig::min_synergy_gap() const { return (1.0 + gamma) / (2.0 / k + 1.0 + gamma); }

double PotentialConfig::denom_lo() const {
  return 1.0 + k - std::sqrt(1.0 + 2.0 * k * gamma + k * k);
}

double PotentialConfig::denom_hi() const {
  return 1.0 + k + std::sqrt(1.0 + 2.0 * k * gamma + k * k);
}

bool PotentialConfig::in_logic_set(const UnitVector& y, double tol) const {
  return r.dot(y) <= gamma + tol;
}

UnitVector PotentialConfig::boundary_tiebreak() const {
  const Vector& rc = r.coords();
  for (int i = 0; i < rc.size(); ++i) {
    Vector e = Vector::Zero(rc.size());
    e[i] = 1.0;
    Vector perp = e - rc * rc[i];
    if (perp.norm() > 1e-6) {
      perp /= perp.norm();
      return UnitVector(gamma * rc + std::sqrt(1.0 - gamma * gamma) * perp);
    }
  }
  throw std::logic_error("boundary_tiebreak: no canonical axis transverse to r");  // unreachable
}

namespace detail {

double alpha_branch(const PotentialConfig& cfg, double v) {
  const double one_m_v2 = std::max(0.0, 1.0 - v * v);
  return cfg.gamma * v - std::sqrt(one_m_v2 * (1.0 - cfg.gamma * cfg.gamma));
}

double sigma_branch(const PotentialConfig& cfg, double v) {
  const double one_m_v2 = std::max(0.0, 1.0 - v * v);
  return cfg.gamma * std::sqrt(one_m_v2) + v * std::sqrt(1.0 - cfg.gamma * cfg.gamma);
}

double potential_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y) {
  const double hr = 1.0 - cfg.r.coords().dot(x);
  const double hy = 1.0 - y.dot(x);
  return hr / (hr + cfg.k * hy);
}

Vector grad_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y) {
  const double hr = 1.0 - cfg.r.coords().dot(x);
  const double hy = 1.0 - y.dot(x);
  const double den = hr + cfg.k * hy;
  const double v = hr / den;
  return (cfg.k * v * y - (1.0 - v) * cfg.r.coords()) / den;
}

double tangent_grad_norm_sq_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y) {
  const double hr = 1.0 - cfg.r.coords().dot(x);
  const double hy = 1.0 - y.dot(x);
  const double den = hr + cfg.k * hy;
  const double v = hr / den;
  return 2.0 * cfg.k * v * (1.0 - v) * (1.0 - cfg.r.coords().dot(y)) / (den * den);
}

double min_over_y_raw(const PotentialConfig& cfg, const Ref& x) {
  const double v = std::clamp(cfg.r.coords().dot(x), -1.0, 1.0);
  const double hr = 1.0 - v;
  if (v >= -cfg.gamma) {
    return hr / (hr + 2.0 * cfg.k);
  }
  return hr / (hr + cfg.k * (1.0 - alpha_branch(cfg, v)));
}

Vector argmin_raw(const PotentialConfig& cfg, const Ref& x) {
  constexpr double kBranchTol = 1e-12;
  const double v = std::clamp(cfg.r.coords().dot(x), -1.0, 1.0);
  if (v >= 1.0 - kBranchTol || v <= -1.0 + kBranchTol) {
    // x = r: any y in Y minimizes; r^T x = -1: any boundary point does.
    return cfg.boundary_tiebreak().coords();
  }
  if (v >= -cfg.gamma - kBranchTol) {
    return -x;
  }
  Vector dir = cfg.r.coords() - x * v;
  dir /= dir.norm();
  return sigma_branch(cfg, v) * dir + alpha_branch(cfg, v) * x;
}

double synergy_gap_raw(const PotentialConfig& cfg, const Ref& x, const Ref& y) {
  return potential_raw(cfg, x, y) - min_over_y_raw(cfg, x);
}

}  // namespace detail

double height(const UnitVector& r, const UnitVector& x) { return 1.0 - r.dot(x); }

static void check_potential_domain(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y) {
  if ((x.coords() - cfg.r.coords()).norm() < 1e-12 && (y.coords() - cfg.r.coords()).norm() < 1e-12) {
    throw OutsideDomain("potential: (x, y) = (r, r) is outside the domain of V");
  }
  if (!cfg.in_logic_set(y)) {
    throw LogicVarOutsideY("potential: r^T y = " + std::to_string(cfg.r.dot(y)) + " exceeds gamma = " +
                           std::to_string(cfg.gamma));
  }
}

double potential(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y) {
  check_potential_domain(cfg, x, y);
  return detail::potential_raw(cfg, x.coords(), y.coords());
}

Vector grad_potential(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y) {
  check_potential_domain(cfg, x, y);
  return detail::grad_raw(cfg, x.coords(), y.coords());
}

double tangent_grad_norm_sq(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y) {
  check_potential_domain(cfg, x, y);
  return detail::tangent_grad_norm_sq_raw(cfg, x.coords(), y.coords());
}

double min_over_y(const PotentialConfig& cfg, const UnitVector& x) {
  return detail::min_over_y_raw(cfg, x.coords());
}

UnitVector argmin_over_y(const PotentialConfig& cfg, const UnitVector& x) {
  return UnitVector(detail::argmin_raw(cfg, x.coords()));
}

double synergy_gap(const PotentialConfig& cfg, const UnitVector& x, const UnitVector& y) {
  check_potential_domain(cfg, x, y);
  return detail::synergy_gap_raw(cfg, x.coords(), y.coords());
}

ExpConstants exp_constants(const PotentialConfig& cfg, const FlowSetGrid& grid, Exec exec) {
  const double s = std::sqrt(1.0 + 2.0 * cfg.k * cfg.gamma + cfg.k * cfg.k);
  ExpConstants out;
  out.alpha_low = 1.0 / (2.0 * (1.0 + cfg.k + s));
  out.alpha_up = 1.0 / (2.0 * (1.0 + cfg.k - s));
  out.v_flow_max_bound = cfg.delta + 2.0 / (2.0 + cfg.k * (1.0 + cfg.gamma));
  out.v_flow_max = kernels::max_potential_on_flow_set(cfg, grid.sphere_points, grid.y_points_per_x,
                                                      grid.refine_steps, grid.seed, exec)
                       .value;
  const double den = 1.0 + cfg.k + s;
  out.lambda = 2.0 * cfg.k * (1.0 - out.v_flow_max) * (1.0 - cfg.gamma) / (den * den);
  return out;
}

bool PropertyReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

PropertyReport verify_potential_properties(const PotentialConfig& cfg, long long sample_count,
                                           std::uint64_t seed, Exec exec) {
  if (sample_count < 1000) {
    throw std::invalid_argument("verify_potential_properties: sample_count must be >= 1000");
  }
  return kernels::run_property_suite(cfg, sample_count, seed, exec);
}

}  // namespace synctl
