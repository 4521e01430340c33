#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "synctl/exec.hpp"
#include "synctl/potential.hpp"
#include "synctl/sphere.hpp"

namespace synctl::kernels {

/// Fibonacci lattice with `count` points covering S^2.
std::vector<UnitVector> fibonacci_sphere(int count);

/// Equal-area Fibonacci-style lattice on the cap Y = {r^T y <= gamma} of S^2:
/// heights spaced uniformly in [-1, gamma], golden-angle azimuths in a frame
/// with pole r. All points lie exactly in Y.
std::vector<UnitVector> fibonacci_cap(const UnitVector& r, double gamma, int count);

/// Seeded uniform samples on S^{ambient_dim-1} (normalized Gaussians).
std::vector<UnitVector> random_sphere(int ambient_dim, long long count, std::uint64_t seed);

/// Seeded uniform samples on the cap Y (rejection from the sphere).
std::vector<UnitVector> random_cap(const UnitVector& r, double gamma, long long count,
                                   std::uint64_t seed);

/// min over the grid of mu(y, y) = 1 - min_over_y(y). Points outside Y
/// (beyond 1e-9) are skipped. Serial and parallel modes are bit-identical.
double min_sticky_gap(const PotentialConfig& cfg, std::span<const UnitVector> cap_grid, Exec exec);

struct FlowSetMax {
  double value = 0.0;
  Vector x;
  Vector y;
};

/// Grid maximization of V over the flow set {(x, y) : mu(x, y) <= delta,
/// y in Y}: sphere_points x-samples (Fibonacci lattice for S^2, seeded uniform
/// otherwise) crossed with a y_points_per_x cap subgrid, followed by
/// refine_steps of projected gradient ascent from the best pair (step halving,
/// rejecting steps that leave the flow set).
FlowSetMax max_potential_on_flow_set(const PotentialConfig& cfg, int sphere_points,
                                     int y_points_per_x, int refine_steps, std::uint64_t seed,
                                     Exec exec);

/// Implementation behind verify_potential_properties.
PropertyReport run_property_suite(const PotentialConfig& cfg, long long sample_count,
                                  std::uint64_t seed, Exec exec);

}  // namespace synctl::kernels
