#include "densynth/riccati.hpp"

#include <Eigen/Eigenvalues>
#include <stdexcept>

namespace densynth {

namespace {

MatrixXd kron(const MatrixXd& a, const MatrixXd& b) {
  MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

}  // namespace

MatrixXd solve_lyapunov(const MatrixXd& A, const MatrixXd& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw std::invalid_argument("solve_lyapunov: shape mismatch");
  // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
  MatrixXd id = MatrixXd::Identity(n, n);
  MatrixXd coeff = kron(id, A.transpose()) + kron(A.transpose(), id);
  VectorXd rhs = -Eigen::Map<const VectorXd>(Q.data(), n * n);
  VectorXd vec = coeff.fullPivLu().solve(rhs);
  MatrixXd p = Eigen::Map<MatrixXd>(vec.data(), n, n);
  p = 0.5 * (p + p.transpose()).eval();
  const double scale = Q.norm() + A.norm() * p.norm() + 1.0;
  if (!p.allFinite() ||
      (A.transpose() * p + p * A + Q).norm() > 1e-6 * scale)
    throw std::runtime_error("solve_lyapunov: no solution (A not Hurwitz?)");
  return p;
}

LqrResult solve_lqr(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                    const MatrixXd& R) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  if (A.cols() != n || B.rows() != n || Q.rows() != n || Q.cols() != n ||
      R.rows() != m || R.cols() != m)
    throw std::invalid_argument("solve_lqr: shape mismatch");

  auto require_pd = [](const MatrixXd& p) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> se(p);
    if (se.eigenvalues().minCoeff() <= 0)
      throw std::runtime_error("solve_lqr: value matrix is not positive definite");
  };

  LqrResult res;
  if (B.norm() < 1e-8) {
    res.P = solve_lyapunov(A, Q);
    require_pd(res.P);
    res.K = R.llt().solve(B.transpose() * res.P);
    res.used_lyapunov = true;
    return res;
  }

  MatrixXd rinv_bt = R.llt().solve(B.transpose());
  MatrixXd ham(2 * n, 2 * n);
  ham.topLeftCorner(n, n) = A;
  ham.topRightCorner(n, n) = -B * rinv_bt;
  ham.bottomLeftCorner(n, n) = -Q;
  ham.bottomRightCorner(n, n) = -A.transpose();

  Eigen::ComplexEigenSolver<MatrixXd> eig(ham);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("solve_lqr: eigensolver failed");
  Eigen::MatrixXcd basis(2 * n, n);
  Eigen::Index found = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    if (eig.eigenvalues()[i].real() < 0) {
      if (found == n)
        throw std::runtime_error("solve_lqr: too many stable eigenvalues");
      basis.col(found++) = eig.eigenvectors().col(i);
    }
  }
  if (found != n)
    throw std::runtime_error("solve_lqr: stable subspace has wrong dimension");
  Eigen::MatrixXcd x = basis.topRows(n);
  Eigen::MatrixXcd y = basis.bottomRows(n);
  MatrixXd p = (y * x.inverse()).real();
  p = 0.5 * (p + p.transpose()).eval();
  const double scale = Q.norm() + p.norm() * (A.norm() + 1.0) + 1.0;
  MatrixXd resid = A.transpose() * p + p * A - p * B * rinv_bt * p + Q;
  if (!p.allFinite() || resid.norm() > 1e-6 * scale)
    throw std::runtime_error("solve_lqr: residual too large");
  require_pd(p);
  res.P = p;
  res.K = rinv_bt * p;
  return res;
}

}  // namespace densynth
