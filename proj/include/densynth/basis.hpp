#pragma once

// Dictionary of basis functions used for generator estimation and synthesis.
// A dictionary is either the raw monomial list or a tensor-product Legendre
// family, both truncated by total degree and indexed graded-lexicographically.
// Legendre factors are evaluated in variables affinely scaled from the domain
// box to [-1,1], which keeps the empirical Gram matrices well conditioned on
// box-shaped domains.

#include <memory>
#include <optional>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "densynth/poly.hpp"

namespace densynth {

enum class BasisKind { kMonomial, kLegendre };

std::string to_string(BasisKind kind);
BasisKind basis_kind_from_string(const std::string& s);

class BasisDictionary {
 public:
  // domain_lo/hi give the box the Legendre factors are scaled from; the
  // monomial kind records the box but does not use it.
  BasisDictionary(BasisKind kind, int n_vars, int max_degree,
                  const VectorXd& domain_lo, const VectorXd& domain_hi);

  BasisKind kind() const { return kind_; }
  int n_vars() const { return n_; }
  int max_degree() const { return deg_; }
  int size() const { return c_psi_.rows(); }  // Q
  const VectorXd& domain_lo() const { return lo_; }
  const VectorXd& domain_hi() const { return hi_; }

  // Common monomial list (same total-degree bound, so Q == M here).
  const MonomialTable& monomials() const { return *table_; }

  // Q x M matrix with psi = c_psi * m(x) over the common monomial list.
  const MatrixXd& c_psi() const { return c_psi_; }

  // Q x n matrix with x_i = c_x.col(i)^T psi; requires degree >= 1.
  const MatrixXd& c_x() const { return c_x_; }

  // Values of all dictionary functions at x.
  void eval(const Eigen::Ref<const VectorXd>& x, VectorXd& psi) const;
  // Values and gradients; grad(k, i) = d psi_k / d x_i.
  void eval_grad(const Eigen::Ref<const VectorXd>& x, VectorXd& psi,
                 MatrixXd& grad) const;

  // Monomial form of coeffs^T psi.
  Poly to_poly(const Eigen::Ref<const VectorXd>& coeffs) const;
  // Dictionary coefficients of p; when p exceeds max_degree the excess terms
  // are dropped (coefficient-space least squares) and *truncated is set.
  VectorXd from_poly(const Poly& p, bool* truncated = nullptr) const;

  // Maps coefficients over the monomial table (n_vars, deg) to dictionary
  // coefficients; exact because deg <= max_degree is required.
  MatrixXd lift_matrix(int deg) const;

  nlohmann::json descriptor() const;
  static BasisDictionary from_descriptor(const nlohmann::json& j);
  bool same_descriptor(const BasisDictionary& other) const;

 private:
  BasisKind kind_;
  int n_ = 0;
  int deg_ = 0;
  VectorXd lo_, hi_;
  std::shared_ptr<const MonomialTable> table_;
  MatrixXd c_psi_;   // Q x M
  MatrixXd c_x_;     // Q x n
  Eigen::PartialPivLU<MatrixXd> to_dict_;  // factorization of c_psi^T
  // Per-variable affine scaling s_i = scale_[i] * x_i + shift_[i].
  VectorXd scale_, shift_;
};

}  // namespace densynth
