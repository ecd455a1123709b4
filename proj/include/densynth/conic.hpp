#pragma once

// Primal-dual interior-point solver for linear cone programs
//
//   min c^T x   s.t.  A x = b,   x in K = R^f x R+^l x S+^{d_1} x ... ,
//
// with symmetric matrix blocks in scaled-vector (svec) form: the lower
// triangle stacked column by column, off-diagonal entries multiplied by
// sqrt(2) so that inner products of svec vectors equal trace inner products.
// The search direction uses Nesterov-Todd scaling with a Mehrotra
// predictor-corrector; infeasible problems are reported through normalized
// Farkas certificates instead of an error.

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace densynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct ConeSpec {
  int n_free = 0;
  int n_nonneg = 0;
  std::vector<int> psd_dims;  // side lengths of the matrix blocks

  int svec_dim(int block) const {
    const int d = psd_dims[block];
    return d * (d + 1) / 2;
  }
  int dim() const;         // stacked length of x
  int cone_dim() const;    // dim() - n_free
  int barrier_degree() const;  // n_nonneg + sum of psd sides
};

// svec packing helpers.
int svec_length(int d);
// Position of entry (i, j) (either order) in the svec of a d x d matrix.
int svec_index(int d, int i, int j);
VectorXd svec(const MatrixXd& m);
MatrixXd smat(const Eigen::Ref<const VectorXd>& v, int d);

struct ConicProblem {
  ConeSpec cone;
  MatrixXd A;  // n_eq x cone.dim()
  VectorXd b;
  VectorXd c;
};

enum class ConicStatus {
  kOptimal,
  kPrimalInfeasible,
  kDualInfeasible,
  kMaxIterations,
  kNumericalTrouble,
};

std::string to_string(ConicStatus s);

struct ConicOptions {
  double tol = 1e-8;
  int max_iter = 200;
  bool verbose = false;
  // Ruiz equilibration passes over A before solving (0 disables).  Rows and
  // free/nonneg columns get individual scales; a matrix block is scaled by a
  // diagonal congruence so it stays a semidefinite variable.  Convergence is
  // still measured on the problem as given.
  int equil_passes = 10;
};

struct ConicSolution {
  ConicStatus status = ConicStatus::kNumericalTrouble;
  VectorXd x;  // primal point (best iterate on non-optimal exits)
  VectorXd y;  // equality multipliers
  VectorXd z;  // dual cone variable (zero on the free part)
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  int iterations = 0;
  // For kPrimalInfeasible: y with b^T y = 1 and A^T y + z ~ 0, z in K*.
  // For kDualInfeasible: x in K with A x ~ 0 and c^T x = -1.
  VectorXd certificate;
  nlohmann::json stats;
};

ConicSolution solve_conic(const ConicProblem& prob,
                          const ConicOptions& opt = {});

// Independent residual/membership check of a reported solution or
// certificate; fills *report with the measured quantities when given.
bool verify_solution(const ConicProblem& prob, const ConicSolution& sol,
                     double tol, nlohmann::json* report = nullptr);

}  // namespace densynth
