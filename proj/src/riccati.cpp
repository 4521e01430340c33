#include "synctl/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <string>
#include <vector>

#include "synctl/errors.hpp"

namespace synctl {

double spectral_abscissa(const Eigen::MatrixXd& m) {
  return Eigen::EigenSolver<Eigen::MatrixXd>(m, false).eigenvalues().real().maxCoeff();
}

Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w) {
  const auto n = m.rows();
  // vec(M^T P + P M) = (I (x) M^T + M^T (x) I) vec(P), column-major vec.
  Eigen::MatrixXd kron = Eigen::MatrixXd::Zero(n * n, n * n);
  const Eigen::MatrixXd mt = m.transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    kron.block(j * n, j * n, n, n) += mt;  // I (x) M^T
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index l = 0; l < n; ++l) {
        kron(j * n + i, l * n + i) += mt(j, l);  // M^T (x) I
      }
    }
  }
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(w.data(), n * n);
  Eigen::VectorXd p = kron.partialPivLu().solve(rhs);
  Eigen::MatrixXd P = Eigen::Map<const Eigen::MatrixXd>(p.data(), n, n);
  return 0.5 * (P + P.transpose());
}

namespace {

// Bass's stabilizing gain: with beta > ||A||_F, solve
// (A + beta I) Z + Z (A + beta I)^T = 2 B B^T and take K = -B^T Z^-1.
bool bass_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::MatrixXd& k_out) {
  const double beta = a.norm() + 1.0;
  const auto n = a.rows();
  const Eigen::MatrixXd shifted = (a + beta * Eigen::MatrixXd::Identity(n, n)).transpose();
  const Eigen::MatrixXd z = lyapunov_solve(shifted, -2.0 * b * b.transpose());
  Eigen::FullPivLU<Eigen::MatrixXd> lu(z);
  if (!lu.isInvertible()) return false;
  k_out = -b.transpose() * lu.inverse();
  return true;
}

}  // namespace

Eigen::MatrixXd care_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                           const std::optional<Eigen::MatrixXd>& k0_hint) {
  const auto n = a.rows();
  const auto m = b.cols();
  const Eigen::MatrixXd rinv_bt = r.ldlt().solve(b.transpose());

  std::vector<Eigen::MatrixXd> candidates;
  if (k0_hint) candidates.push_back(*k0_hint);
  candidates.push_back(Eigen::MatrixXd::Zero(m, n));
  if (n == 2 * m) {
    Eigen::MatrixXd k(m, n);
    k << -Eigen::MatrixXd::Identity(m, m), -2.0 * Eigen::MatrixXd::Identity(m, m);
    candidates.push_back(k);
  }
  {
    Eigen::MatrixXd k;
    if (bass_gain(a, b, k)) candidates.push_back(k);
  }

  Eigen::MatrixXd k0;
  bool found = false;
  for (const auto& k : candidates) {
    if (spectral_abscissa(a + b * k) < -1e-9) {
      k0 = k;
      found = true;
      break;
    }
  }
  if (!found) {
    throw NotStabilizable("care_solve: no stabilizing initial gain found for (A, B)");
  }

  Eigen::MatrixXd k = k0;
  Eigen::MatrixXd p;
  for (int it = 0; it < 100; ++it) {
    const Eigen::MatrixXd acl = a + b * k;
    p = lyapunov_solve(acl, q + k.transpose() * r * k);
    k = -rinv_bt * p;
    const Eigen::MatrixXd residual =
        a.transpose() * p + p * a - p * b * (rinv_bt * p) + q;
    if (residual.norm() < 1e-10) {
      if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(p).eigenvalues().minCoeff() <= 0.0) {
        throw NoConvergence("care_solve: converged to a non-positive-definite solution");
      }
      return p;
    }
  }
  throw NoConvergence("care_solve: residual above 1e-10 after 100 Kleinman-Newton iterations");
}

}  // namespace synctl
