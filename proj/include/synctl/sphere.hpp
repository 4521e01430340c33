#pragma once

#include <Eigen/Dense>
#include <span>

namespace synctl {

using Vector = Eigen::VectorXd;

/// A point on the n-sphere embedded in R^{n+1}. The constructor renormalizes,
/// so instances carry unit norm (within 1e-12) by construction.
class UnitVector {
 public:
  explicit UnitVector(Vector coords);
  UnitVector(std::initializer_list<double> coords);

  const Vector& coords() const { return coords_; }
  int ambient_dim() const { return static_cast<int>(coords_.size()); }
  int sphere_dim() const { return ambient_dim() - 1; }

  double dot(const UnitVector& other) const { return coords_.dot(other.coords_); }
  UnitVector negated() const;

  /// Canonical basis vector e_i of R^{ambient_dim} as a sphere point.
  static UnitVector axis(int ambient_dim, int i);

 private:
  Vector coords_;
};

/// Element of SO(3). The checked constructor enforces R^T R = I and det R = 1
/// to 1e-10.
class Rotation {
 public:
  explicit Rotation(const Eigen::Matrix3d& mat);
  static Rotation identity();

  const Eigen::Matrix3d& matrix() const { return mat_; }

 private:
  Eigen::Matrix3d mat_;
};

/// A vector in the tangent space at `base` (vec^T base = 0 to 1e-10).
struct TangentVector {
  UnitVector base;
  Vector vec;
};

/// I - x x^T as a dense matrix.
Eigen::MatrixXd tangent_projector(const UnitVector& x);

/// (I - x x^T) w.
TangentVector project_tangent(const UnitVector& x, const Vector& w);

/// Skew-symmetric matrix S(v) with S(v) u = v x u.
Eigen::Matrix3d skew(const Eigen::Vector3d& v);

/// Rotation exponential exp(S(theta)) via the Rodrigues formula; exact small-
/// angle series below 1e-6 rad.
Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& theta);

/// Point at arc length t along the geodesic from x0 towards r:
///   x0 cos t + (P(x0) r / |P(x0) r|) sin t.
/// Throws DegenerateGeodesic when x0 is (anti)parallel to r, where the
/// direction is undefined; callers needing an antipodal path must supply an
/// explicit orthogonal direction instead.
UnitVector geodesic_point(const UnitVector& x0, const UnitVector& r, double t);

/// arccos(clamp(x^T r, -1, 1)) in [0, pi].
double geodesic_distance(const UnitVector& x, const UnitVector& r);

/// Sum of geodesic distances between consecutive samples. For samples lying on
/// a common geodesic the arc lengths are additive, so fine sampling needs no
/// chordal-to-arc correction; for general curves this is the usual piecewise
/// great-circle approximation. Throws TooFewSamples below 2 samples.
double path_length(std::span<const UnitVector> samples);

/// One step of Rdot = R S(omega): R · exp(S(omega h)). Preserves the SO(3)
/// invariants up to floating point.
Rotation integrate_rotation_step(const Rotation& R, const Eigen::Vector3d& omega, double h);

}  // namespace synctl
