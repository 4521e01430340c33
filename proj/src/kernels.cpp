#include "synctl/kernels.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "synctl/errors.hpp"

#ifdef SYNCTL_HAVE_OPENMP
#include <omp.h>
#endif

namespace synctl {

int max_threads(Exec mode) {
#ifdef SYNCTL_HAVE_OPENMP
  return mode == Exec::parallel ? omp_get_max_threads() : 1;
#else
  (void)mode;
  return 1;
#endif
}

}  // namespace synctl

namespace synctl::kernels {

namespace {

constexpr double kGoldenAngle = 2.39996322972865332;  // pi (3 - sqrt 5)

// Orthonormal pair spanning the plane orthogonal to r in R^3.
std::pair<Eigen::Vector3d, Eigen::Vector3d> frame_orthogonal_to(const Eigen::Vector3d& r) {
  Eigen::Vector3d a = std::abs(r.x()) < 0.9 ? Eigen::Vector3d::UnitX() : Eigen::Vector3d::UnitY();
  Eigen::Vector3d e1 = (a - r * r.dot(a)).normalized();
  Eigen::Vector3d e2 = r.cross(e1);
  return {e1, e2};
}

}  // namespace

std::vector<UnitVector> fibonacci_sphere(int count) {
  if (count < 1) throw std::invalid_argument("fibonacci_sphere: count must be >= 1");
  std::vector<UnitVector> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = kGoldenAngle * i;
    Vector p(3);
    p << rho * std::cos(phi), rho * std::sin(phi), z;
    pts.emplace_back(std::move(p));
  }
  return pts;
}

std::vector<UnitVector> fibonacci_cap(const UnitVector& r, double gamma, int count) {
  if (r.ambient_dim() != 3) throw std::invalid_argument("fibonacci_cap: only defined on S^2");
  if (count < 1) throw std::invalid_argument("fibonacci_cap: count must be >= 1");
  const Eigen::Vector3d rc = r.coords();
  auto [e1, e2] = frame_orthogonal_to(rc);
  std::vector<UnitVector> pts;
  pts.reserve(count);
  // The pole -r and a ring exactly on the boundary r^T y = gamma, then an
  // equal-area spiral over the interior. Constrained minimizers of V(x, .)
  // sit on the boundary, so without the ring a brute-force grid min carries a
  // first-order error in the ring-to-grid distance.
  const int ring = count >= 16 ? std::clamp(static_cast<int>(std::lround(2.0 * std::sqrt(count))),
                                            8, count / 4)
                               : 0;
  const int interior = count - ring - (count >= 2 ? 1 : 0);
  if (count >= 2) pts.emplace_back(Vector(-rc));
  const double ring_rho = std::sqrt(std::max(0.0, 1.0 - gamma * gamma));
  for (int i = 0; i < ring; ++i) {
    const double phi = 2.0 * M_PI * i / ring;
    Vector p = gamma * rc + ring_rho * (std::cos(phi) * e1 + std::sin(phi) * e2);
    pts.emplace_back(std::move(p));
  }
  for (int i = 0; i < interior; ++i) {
    const double z = -1.0 + (gamma + 1.0) * (i + 0.5) / interior;  // r^T y, equal-area in the cap
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = kGoldenAngle * i;
    Vector p = z * rc + rho * (std::cos(phi) * e1 + std::sin(phi) * e2);
    pts.emplace_back(std::move(p));
  }
  return pts;
}

std::vector<UnitVector> random_sphere(int ambient_dim, long long count, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  std::vector<UnitVector> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (long long i = 0; i < count; ++i) {
    Vector v(ambient_dim);
    do {
      for (int d = 0; d < ambient_dim; ++d) v[d] = gauss(eng);
    } while (v.norm() < 1e-8);
    pts.emplace_back(std::move(v));
  }
  return pts;
}

std::vector<UnitVector> random_cap(const UnitVector& r, double gamma, long long count,
                                   std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> gauss;
  const int ambient = r.ambient_dim();
  std::vector<UnitVector> pts;
  pts.reserve(static_cast<std::size_t>(count));
  Vector v(ambient);
  for (long long i = 0; i < count; ++i) {
    for (;;) {
      for (int d = 0; d < ambient; ++d) v[d] = gauss(eng);
      const double n = v.norm();
      if (n < 1e-8) continue;
      if (r.coords().dot(v) / n <= gamma) break;
    }
    pts.emplace_back(v);
  }
  return pts;
}

double min_sticky_gap(const PotentialConfig& cfg, std::span<const UnitVector> cap_grid, Exec exec) {
  const auto n = static_cast<long long>(cap_grid.size());
  double best = std::numeric_limits<double>::infinity();
  if (exec == Exec::serial || max_threads(exec) == 1) {
    for (long long i = 0; i < n; ++i) {
      const Vector& y = cap_grid[i].coords();
      if (cfg.r.coords().dot(y) > cfg.gamma + 1e-9) continue;
      best = std::min(best, 1.0 - detail::min_over_y_raw(cfg, y));
    }
    return best;
  }
#ifdef SYNCTL_HAVE_OPENMP
#pragma omp parallel for schedule(static) reduction(min : best)
  for (long long i = 0; i < n; ++i) {
    const Vector& y = cap_grid[i].coords();
    if (cfg.r.coords().dot(y) > cfg.gamma + 1e-9) continue;
    best = std::min(best, 1.0 - detail::min_over_y_raw(cfg, y));
  }
#endif
  return best;
}

namespace {

struct BestPair {
  double value = -std::numeric_limits<double>::infinity();
  long long flat_index = -1;

  void consider(double v, long long idx) {
    // Lower flat index wins ties so serial and parallel runs agree exactly.
    if (v > value || (v == value && idx < flat_index)) {
      value = v;
      flat_index = idx;
    }
  }
  void merge(const BestPair& o) { consider(o.value, o.flat_index); }
};

BestPair scan_flow_set_range(const PotentialConfig& cfg, const std::vector<UnitVector>& xs,
                             const std::vector<UnitVector>& ys, long long lo, long long hi) {
  BestPair best;
  const auto ny = static_cast<long long>(ys.size());
  for (long long flat = lo; flat < hi; ++flat) {
    const Vector& x = xs[static_cast<std::size_t>(flat / ny)].coords();
    const Vector& y = ys[static_cast<std::size_t>(flat % ny)].coords();
    const double v = detail::potential_raw(cfg, x, y);
    const double mu = v - detail::min_over_y_raw(cfg, x);
    if (mu <= cfg.delta) best.consider(v, flat);
  }
  return best;
}

// min_over_y as a function of v = r^T x alone.
double min_branch(const PotentialConfig& cfg, double v) {
  const double hr = 1.0 - v;
  if (v >= -cfg.gamma) return hr / (hr + 2.0 * cfg.k);
  return hr / (hr + cfg.k * (1.0 - detail::alpha_branch(cfg, v)));
}

// max over y in Y of V(x, y), again a function of v only: the best y is x
// itself when x lies in the cap, else the boundary point azimuthally aligned
// with x.
double max_branch(const PotentialConfig& cfg, double v) {
  if (v <= cfg.gamma) return 1.0;
  const double hr = 1.0 - v;
  const double ytx = cfg.gamma * v + std::sqrt(std::max(0.0, (1.0 - v * v)) *
                                               (1.0 - cfg.gamma * cfg.gamma));
  return hr / (hr + cfg.k * (1.0 - ytx));
}

// Largest V attainable on the flow set over the fiber r^T x = v: the cap is
// connected and V(x, .) continuous, so every value in [m(v), M(v)] is hit.
double fiber_target(const PotentialConfig& cfg, double v) {
  return std::min(max_branch(cfg, v), min_branch(cfg, v) + cfg.delta);
}

}  // namespace

FlowSetMax max_potential_on_flow_set(const PotentialConfig& cfg, int sphere_points,
                                     int y_points_per_x, int refine_steps, std::uint64_t seed,
                                     Exec exec) {
  std::vector<UnitVector> xs = cfg.r.ambient_dim() == 3
                                   ? fibonacci_sphere(sphere_points)
                                   : random_sphere(cfg.r.ambient_dim(), sphere_points, seed);
  std::vector<UnitVector> ys = cfg.r.ambient_dim() == 3
                                   ? fibonacci_cap(cfg.r, cfg.gamma, y_points_per_x)
                                   : random_cap(cfg.r, cfg.gamma, y_points_per_x, seed + 1);
  const long long total = static_cast<long long>(xs.size()) * static_cast<long long>(ys.size());

  BestPair best;
  const int nt = max_threads(exec);
  if (nt <= 1) {
    best = scan_flow_set_range(cfg, xs, ys, 0, total);
  } else {
#ifdef SYNCTL_HAVE_OPENMP
    std::vector<BestPair> partial(nt);
#pragma omp parallel num_threads(nt)
    {
      const int tid = omp_get_thread_num();
      const long long chunk = (total + nt - 1) / nt;
      const long long lo = tid * chunk;
      const long long hi = std::min(total, lo + chunk);
      if (lo < hi) partial[tid] = scan_flow_set_range(cfg, xs, ys, lo, hi);
    }
    for (const auto& p : partial) best.merge(p);
#endif
  }
  if (best.flat_index < 0) {
    throw std::runtime_error("max_potential_on_flow_set: no grid pair fell in the flow set");
  }

  const auto ny = static_cast<long long>(ys.size());
  Vector x = xs[static_cast<std::size_t>(best.flat_index / ny)].coords();
  Vector y = ys[static_cast<std::size_t>(best.flat_index % ny)].coords();
  double value = best.value;

  // Local refinement. V(x, y) depends on x only through v = r^T x and the cap
  // Y is rotationally symmetric about r, so the largest V attainable on the
  // flow set over the fiber r^T x = v is the 1-D function fiber_target(v).
  // Shrink a bracket around the best grid fiber, then recover a witness y by
  // bisecting along an in-plane sweep of the cap.
  const Vector& rc = cfg.r.coords();
  double vbest = std::clamp(rc.dot(x), -1.0, 1.0);
  {
    double width = 0.1;
    for (int it = 0; it < refine_steps; ++it) {
      const double lo = std::max(-1.0, vbest - width);
      const double hi = std::min(1.0, vbest + width);
      double cand = vbest;
      double cand_val = fiber_target(cfg, vbest);
      constexpr int kProbes = 7;
      for (int i = 0; i < kProbes; ++i) {
        const double v = lo + (hi - lo) * i / (kProbes - 1);
        const double val = fiber_target(cfg, v);
        if (val > cand_val) {
          cand_val = val;
          cand = v;
        }
      }
      vbest = cand;
      width = std::max((hi - lo) / (kProbes - 1), 1e-17);
    }
  }
  const double refined = fiber_target(cfg, vbest);
  if (refined > value) {
    // Rebuild the witness pair in the plane spanned by r and the grid x.
    Vector perp = x - rc * rc.dot(x);
    if (perp.norm() < 1e-9) {
      const Vector tie = cfg.boundary_tiebreak().coords();
      perp = tie - rc * rc.dot(tie);
    }
    perp /= perp.norm();
    x = vbest * rc + std::sqrt(std::max(0.0, 1.0 - vbest * vbest)) * perp;
    x /= x.norm();

    const double theta_cap = std::acos(cfg.gamma);
    auto y_at = [&](double theta) { return Vector(std::cos(theta) * rc + std::sin(theta) * perp); };
    if (max_branch(cfg, vbest) <= min_branch(cfg, vbest) + cfg.delta) {
      y = vbest <= cfg.gamma ? x : y_at(theta_cap);
    } else {
      // Sweep the in-plane cross-section of the cap; V is continuous along it
      // and spans [~m, ~M], so the target m + delta is bracketed next to the
      // sweep maximum.
      constexpr int kSweep = 2048;
      const double theta_end = 2.0 * M_PI - theta_cap;
      auto theta_of = [&](int i) { return theta_cap + (theta_end - theta_cap) * i / kSweep; };
      int i_max = 0;
      double v_max = -1.0;
      std::vector<double> vals(kSweep + 1);
      for (int i = 0; i <= kSweep; ++i) {
        vals[static_cast<std::size_t>(i)] = detail::potential_raw(cfg, x, y_at(theta_of(i)));
        if (vals[static_cast<std::size_t>(i)] > v_max) {
          v_max = vals[static_cast<std::size_t>(i)];
          i_max = i;
        }
      }
      double th_above = theta_of(i_max);
      double th_below = th_above;
      for (int i = i_max + 1; i <= kSweep; ++i) {
        if (vals[static_cast<std::size_t>(i)] <= refined) {
          th_below = theta_of(i);
          th_above = theta_of(i - 1);
          break;
        }
      }
      if (th_below == th_above) {
        for (int i = i_max - 1; i >= 0; --i) {
          if (vals[static_cast<std::size_t>(i)] <= refined) {
            th_below = theta_of(i);
            th_above = theta_of(i + 1);
            break;
          }
        }
      }
      for (int i = 0; i < 60 && th_below != th_above; ++i) {
        const double mid = 0.5 * (th_below + th_above);
        if (detail::potential_raw(cfg, x, y_at(mid)) <= refined) th_below = mid;
        else th_above = mid;
      }
      y = y_at(th_below);  // V <= target keeps the witness inside the flow set
    }
    value = detail::potential_raw(cfg, x, y);
  }
  return FlowSetMax{value, x, y};
}

namespace {

struct SuiteStats {
  long long range_viol = 0;
  double v_min = std::numeric_limits<double>::infinity();
  double v_max = -std::numeric_limits<double>::infinity();
  long long floor_samples = 0;
  double grad_sq_min = std::numeric_limits<double>::infinity();
  long long denom_viol = 0;
  double den_min = std::numeric_limits<double>::infinity();
  double den_max = -std::numeric_limits<double>::infinity();
  long long sandwich_viol = 0;
  double sandwich_margin = std::numeric_limits<double>::infinity();

  void merge(const SuiteStats& o) {
    range_viol += o.range_viol;
    v_min = std::min(v_min, o.v_min);
    v_max = std::max(v_max, o.v_max);
    floor_samples += o.floor_samples;
    grad_sq_min = std::min(grad_sq_min, o.grad_sq_min);
    denom_viol += o.denom_viol;
    den_min = std::min(den_min, o.den_min);
    den_max = std::max(den_max, o.den_max);
    sandwich_viol += o.sandwich_viol;
    sandwich_margin = std::min(sandwich_margin, o.sandwich_margin);
  }
};

SuiteStats suite_range(const PotentialConfig& cfg, const std::vector<UnitVector>& xs,
                       const std::vector<UnitVector>& ys, double alpha_low, double alpha_up,
                       long long lo, long long hi) {
  SuiteStats st;
  const Vector& rc = cfg.r.coords();
  const double dlo = cfg.denom_lo() - 1e-12;
  const double dhi = cfg.denom_hi() + 1e-12;
  for (long long i = lo; i < hi; ++i) {
    const Vector& x = xs[static_cast<std::size_t>(i)].coords();
    const Vector& y = ys[static_cast<std::size_t>(i)].coords();
    const double hr = 1.0 - rc.dot(x);
    const double den = hr + cfg.k * (1.0 - y.dot(x));
    const double v = hr / den;

    if (v < 0.0 || v > 1.0) ++st.range_viol;
    st.v_min = std::min(st.v_min, v);
    st.v_max = std::max(st.v_max, v);

    if (den < dlo || den > dhi) ++st.denom_viol;
    st.den_min = std::min(st.den_min, den);
    st.den_max = std::max(st.den_max, den);

    const double d2 = (x - rc).squaredNorm();
    const double lo_gap = v - alpha_low * d2;
    const double hi_gap = alpha_up * d2 - v;
    if (lo_gap < -1e-12 || hi_gap < -1e-12) ++st.sandwich_viol;
    st.sandwich_margin = std::min(st.sandwich_margin, std::min(lo_gap, hi_gap));

    if (d2 > 0.01 && (x - y).squaredNorm() > 0.01) {
      ++st.floor_samples;
      Vector g = detail::grad_raw(cfg, x, y);
      g -= x * x.dot(g);
      st.grad_sq_min = std::min(st.grad_sq_min, g.squaredNorm());
    }
  }
  return st;
}

}  // namespace

PropertyReport run_property_suite(const PotentialConfig& cfg, long long sample_count,
                                  std::uint64_t seed, Exec exec) {
  const int ambient = cfg.r.ambient_dim();
  std::vector<UnitVector> xs = random_sphere(ambient, sample_count, seed);
  std::vector<UnitVector> ys = random_cap(cfg.r, cfg.gamma, sample_count, seed + 0x9e3779b97f4a7c15ull);

  const double s = std::sqrt(1.0 + 2.0 * cfg.k * cfg.gamma + cfg.k * cfg.k);
  const double alpha_low = 1.0 / (2.0 * (1.0 + cfg.k + s));
  const double alpha_up = 1.0 / (2.0 * (1.0 + cfg.k - s));

  SuiteStats st;
  const int nt = max_threads(exec);
  if (nt <= 1) {
    st = suite_range(cfg, xs, ys, alpha_low, alpha_up, 0, sample_count);
  } else {
#ifdef SYNCTL_HAVE_OPENMP
    std::vector<SuiteStats> partial(nt);
#pragma omp parallel num_threads(nt)
    {
      const int tid = omp_get_thread_num();
      const long long chunk = (sample_count + nt - 1) / nt;
      const long long lo = tid * chunk;
      const long long hi = std::min<long long>(sample_count, lo + chunk);
      if (lo < hi) partial[tid] = suite_range(cfg, xs, ys, alpha_low, alpha_up, lo, hi);
    }
    for (const auto& p : partial) st.merge(p);
#endif
  }

  // (v) mu-continuity on near-pairs: fit L on the first half, check the second.
  const long long pairs = std::min<long long>(sample_count, 20000);
  std::mt19937_64 eng(seed + 0x7f4a7c159e3779b9ull);
  std::normal_distribution<double> gauss;
  std::vector<double> ratios(static_cast<std::size_t>(pairs));
  std::vector<Vector> px1(static_cast<std::size_t>(pairs)), px2(static_cast<std::size_t>(pairs)),
      py(static_cast<std::size_t>(pairs));
  constexpr double kPairStep = 1e-3;
  for (long long i = 0; i < pairs; ++i) {
    const Vector& x1 = xs[static_cast<std::size_t>(i)].coords();
    Vector d(ambient);
    for (int k = 0; k < ambient; ++k) d[k] = gauss(eng);
    d -= x1 * x1.dot(d);
    if (d.norm() < 1e-8) d = (Vector::Unit(ambient, 0) - x1 * x1[0]);
    d.normalize();
    px1[static_cast<std::size_t>(i)] = x1;
    px2[static_cast<std::size_t>(i)] = x1 * std::cos(kPairStep) + d * std::sin(kPairStep);
    py[static_cast<std::size_t>(i)] = ys[static_cast<std::size_t>(i)].coords();
  }
  const long long npairs = pairs;
  if (nt <= 1) {
    for (long long i = 0; i < npairs; ++i) {
      const auto u = static_cast<std::size_t>(i);
      ratios[u] = std::abs(detail::synergy_gap_raw(cfg, px1[u], py[u]) -
                           detail::synergy_gap_raw(cfg, px2[u], py[u])) /
                  (px1[u] - px2[u]).norm();
    }
  } else {
#ifdef SYNCTL_HAVE_OPENMP
#pragma omp parallel for schedule(static) num_threads(nt)
    for (long long i = 0; i < npairs; ++i) {
      const auto u = static_cast<std::size_t>(i);
      ratios[u] = std::abs(detail::synergy_gap_raw(cfg, px1[u], py[u]) -
                           detail::synergy_gap_raw(cfg, px2[u], py[u])) /
                  (px1[u] - px2[u]).norm();
    }
#endif
  }
  double l_fit = 0.0;
  for (long long i = 0; i < pairs / 2; ++i) l_fit = std::max(l_fit, ratios[static_cast<std::size_t>(i)]);
  long long cont_viol = 0;
  double worst_ratio = 0.0;
  for (long long i = pairs / 2; i < pairs; ++i) {
    const double rr = ratios[static_cast<std::size_t>(i)];
    worst_ratio = std::max(worst_ratio, rr);
    if (rr > 2.0 * l_fit + 1e-9) ++cont_viol;
  }

  // Analytic floor for (ii): V >= alpha_low d^2 and 1 - V >= k |x-y|^2 / (2 denom_hi),
  // both beyond 0.1 distance, and 1 - r^T y >= 1 - gamma on Y.
  const double floor_sq = 2.0 * cfg.k * (alpha_low * 0.01) * (cfg.k * 0.005 / cfg.denom_hi()) *
                          (1.0 - cfg.gamma) / (cfg.denom_hi() * cfg.denom_hi());

  PropertyReport rep;
  rep.checks.push_back({"range", st.range_viol == 0, st.range_viol, sample_count, st.v_min, st.v_max,
                        "V within [0, 1]"});
  rep.checks.push_back({"critical-floor", st.floor_samples > 0 && st.grad_sq_min >= floor_sq,
                        st.floor_samples > 0 && st.grad_sq_min >= floor_sq ? 0LL : 1LL,
                        st.floor_samples, st.grad_sq_min, floor_sq,
                        "min |P(x) grad V|^2 over samples with dist(x,{r,y}) > 0.1 vs analytic floor"});
  rep.checks.push_back({"denominator-bounds", st.denom_viol == 0, st.denom_viol, sample_count,
                        st.den_min, st.den_max,
                        "denominator within [1+k-sqrt(1+2k gamma+k^2), 1+k+sqrt(...)] (tol 1e-12)"});
  rep.checks.push_back({"sandwich", st.sandwich_viol == 0, st.sandwich_viol, sample_count,
                        st.sandwich_margin, alpha_up, "alpha_low |x-r|^2 <= V <= alpha_up |x-r|^2"});
  rep.checks.push_back({"mu-continuity", cont_viol == 0, cont_viol, pairs - pairs / 2, worst_ratio,
                        l_fit, "|mu(x1,y)-mu(x2,y)| <= 2 L_fit |x1-x2| + 1e-9 on held-out near-pairs"});
  return rep;
}

}  // namespace synctl::kernels
