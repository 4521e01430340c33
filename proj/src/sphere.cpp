#include "synctl/sphere.hpp"

#include <cmath>
#include <stdexcept>

#include "synctl/errors.hpp"

namespace synctl {

UnitVector::UnitVector(Vector coords) : coords_(std::move(coords)) {
  const double n = coords_.norm();
  if (!std::isfinite(n) || n < 1e-12) {
    throw std::invalid_argument("UnitVector: direction has near-zero or non-finite norm");
  }
  coords_ /= n;
}

UnitVector::UnitVector(std::initializer_list<double> coords)
    : UnitVector(Eigen::Map<const Vector>(coords.begin(), static_cast<Eigen::Index>(coords.size()))) {}

UnitVector UnitVector::negated() const {
  UnitVector out = *this;
  out.coords_ = -out.coords_;
  return out;
}

UnitVector UnitVector::axis(int ambient_dim, int i) {
  Vector v = Vector::Zero(ambient_dim);
  v[i] = 1.0;
  return UnitVector(std::move(v));
}

Rotation::Rotation(const Eigen::Matrix3d& mat) : mat_(mat) {
  const double ortho = (mat_.transpose() * mat_ - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  const double det = mat_.determinant();
  if (!(ortho <= 1e-10) || !(std::abs(det - 1.0) <= 1e-10)) {
    throw std::invalid_argument("Rotation: matrix is not in SO(3) (orthogonality " + std::to_string(ortho) +
                                ", det " + std::to_string(det) + ")");
  }
}

Rotation Rotation::identity() { return Rotation(Eigen::Matrix3d::Identity()); }

Eigen::MatrixXd tangent_projector(const UnitVector& x) {
  const Vector& c = x.coords();
  return Eigen::MatrixXd::Identity(c.size(), c.size()) - c * c.transpose();
}

TangentVector project_tangent(const UnitVector& x, const Vector& w) {
  const Vector& c = x.coords();
  return TangentVector{x, w - c * c.dot(w)};
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Matrix3d rotation_exp(const Eigen::Vector3d& theta) {
  const double a = theta.norm();
  const Eigen::Matrix3d s = skew(theta);
  double c1, c2;  // exp = I + c1 S + c2 S^2
  if (a < 1e-6) {
    const double a2 = a * a;
    c1 = 1.0 - a2 / 6.0 + a2 * a2 / 120.0;
    c2 = 0.5 - a2 / 24.0 + a2 * a2 / 720.0;
  } else {
    c1 = std::sin(a) / a;
    c2 = (1.0 - std::cos(a)) / (a * a);
  }
  return Eigen::Matrix3d::Identity() + c1 * s + c2 * (s * s);
}

UnitVector geodesic_point(const UnitVector& x0, const UnitVector& r, double t) {
  const Vector& c = x0.coords();
  Vector dir = r.coords() - c * c.dot(r.coords());
  const double n = dir.norm();
  if (n < 1e-12) {
    throw DegenerateGeodesic("geodesic_point: x0 is (anti)parallel to r, direction undefined");
  }
  dir /= n;
  return UnitVector(c * std::cos(t) + dir * std::sin(t));
}

double geodesic_distance(const UnitVector& x, const UnitVector& r) {
  return std::acos(std::clamp(x.dot(r), -1.0, 1.0));
}

double path_length(std::span<const UnitVector> samples) {
  if (samples.size() < 2) {
    throw TooFewSamples("path_length: need at least 2 samples, got " + std::to_string(samples.size()));
  }
  double len = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    len += geodesic_distance(samples[i - 1], samples[i]);
  }
  return len;
}

Rotation integrate_rotation_step(const Rotation& R, const Eigen::Vector3d& omega, double h) {
  return Rotation(R.matrix() * rotation_exp(omega * h));
}

}  // namespace synctl
