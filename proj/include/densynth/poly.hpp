#pragma once

// Multivariate polynomials in dense monomial form over a graded-lexicographic
// monomial list.  This is the substrate shared by the basis dictionaries, the
// transport-constraint assembly and the SOS compiler: every polynomial keeps a
// full coefficient vector over all monomials of total degree <= its table
// degree, ordered by total degree first and lexicographically (x1 most
// significant, descending exponent) within a degree.

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

namespace densynth {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Exponent vector of one monomial, one entry per variable.
using MultiIndex = std::vector<int>;

// All monomials in n variables of total degree <= degree, graded-lex order.
// Tables are immutable and shared; obtain them through MonomialTable::get.
class MonomialTable {
 public:
  MonomialTable(int n_vars, int degree);

  // Shared, cached instance (tables for the same signature are reused).
  static std::shared_ptr<const MonomialTable> get(int n_vars, int degree);

  int n_vars() const { return n_; }
  int degree() const { return deg_; }
  int size() const { return static_cast<int>(exps_.size()); }

  const MultiIndex& exponent(int k) const { return exps_[k]; }
  int total_degree(int k) const { return degs_[k]; }

  // Index of an exponent vector, or -1 when outside the table.
  int index_of(const MultiIndex& e) const;

  // Values of every monomial at x (out resized to size()).
  void eval(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const;

  // Number of monomials in n variables of total degree <= degree.
  static int count(int n_vars, int degree);

 private:
  static std::uint64_t key_of(const MultiIndex& e);

  int n_ = 0;
  int deg_ = 0;
  std::vector<MultiIndex> exps_;
  std::vector<int> degs_;
  std::unordered_map<std::uint64_t, int> lookup_;
};

// Polynomial with a dense coefficient vector over a shared MonomialTable.
class Poly {
 public:
  Poly() = default;  // empty: zero polynomial in zero variables
  Poly(int n_vars, int degree);  // zero polynomial over the given table

  static Poly constant(int n_vars, double value);
  static Poly variable(int n_vars, int i);
  static Poly from_terms(int n_vars,
                         const std::vector<std::pair<MultiIndex, double>>& terms);

  int n_vars() const { return table_ ? table_->n_vars() : 0; }
  // Structural degree (the table bound, not the largest nonzero term).
  int degree() const { return table_ ? table_->degree() : 0; }
  // Largest total degree carrying a nonzero coefficient (0 for the zero poly).
  int actual_degree() const;

  const MonomialTable& table() const { return *table_; }
  const VectorXd& coeffs() const { return coeffs_; }
  VectorXd& coeffs() { return coeffs_; }

  double coeff(const MultiIndex& e) const;
  void set_coeff(const MultiIndex& e, double v);

  double eval(const Eigen::Ref<const VectorXd>& x) const;
  Poly derivative(int var) const;

  // Same polynomial over a table of at least `degree` (embedding).
  Poly embedded(int degree) const;
  // Smallest table holding all nonzero terms (coefficients below tol dropped).
  Poly trimmed(double tol = 0.0) const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;
  Poly operator*(double s) const;
  Poly operator-() const { return *this * -1.0; }
  Poly& operator+=(const Poly& o) { *this = *this + o; return *this; }
  Poly& operator-=(const Poly& o) { *this = *this - o; return *this; }

  bool is_zero(double tol = 0.0) const;

  // Human-readable form, e.g. "-1.38*x1*x2 + 0.5*x2^2".
  std::string to_string(int precision = 6) const;

 private:
  std::shared_ptr<const MonomialTable> table_;
  VectorXd coeffs_;
};

inline Poly operator*(double s, const Poly& p) { return p * s; }

// x^e as a polynomial raised to an integer power.
Poly pow(const Poly& p, int k);

// Sum of the component-wise partial derivatives of a vector field.
Poly divergence_of_field(const std::vector<Poly>& field);

// Matrix representation of q |-> p*q from monomial table (n, in_degree) to
// (n, in_degree + p.degree()); column k holds the coefficients of p * m_k.
MatrixXd multiplication_matrix(const Poly& p, int in_degree);

// JSON form {"basis": {"kind": "monomial", "n_vars": .., "degree": ..},
//            "coeffs": [graded-lex coefficients]}.
nlohmann::json poly_to_json(const Poly& p);
Poly poly_from_json(const nlohmann::json& j);

}  // namespace densynth
