#pragma once

#include <Eigen/Dense>
#include <optional>

namespace synctl {

/// max over eigenvalues of Re(lambda).
double spectral_abscissa(const Eigen::MatrixXd& m);

/// Solves M^T P + P M + W = 0 for P (dense Kronecker vectorization). W need
/// not be symmetric; the result is symmetrized.
Eigen::MatrixXd lyapunov_solve(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w);

/// Continuous-time algebraic Riccati equation A^T P + P A - P B R^-1 B^T P + Q = 0
/// by Kleinman-Newton iteration from a stabilizing initial gain. Candidate
/// starts: K = 0 (A already stable), the double-integrator gain -[I 2I], and
/// Bass's method. Throws NotStabilizable when no candidate stabilizes A + B K,
/// NoConvergence if the residual does not reach 1e-10 within 100 iterations or
/// the solution is not positive definite.
Eigen::MatrixXd care_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           const Eigen::MatrixXd& q, const Eigen::MatrixXd& r,
                           const std::optional<Eigen::MatrixXd>& k0_hint = std::nullopt);

}  // namespace synctl
