#pragma once

// Linear-quadratic machinery for the local controller around the origin.

#include <Eigen/Dense>

namespace densynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Solves A^T P + P A + Q = 0 for symmetric P (A must be Hurwitz).
MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q);

struct LqrResult {
  MatrixXd P;  // value matrix, symmetric positive definite
  MatrixXd K;  // gain, u = -K x
  bool used_lyapunov = false;
};

// Continuous-time LQR: solves A^T P + P A - P B R^{-1} B^T P + Q = 0 via the
// stable invariant subspace of the Hamiltonian matrix and returns
// K = R^{-1} B^T P.  When ||B||_F < 1e-8 the quadratic term is negligible and
// the Lyapunov equation is solved instead (K is then ~0); this covers input
// fields that vanish at the origin.
LqrResult solve_lqr(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R);

}  // namespace densynth
