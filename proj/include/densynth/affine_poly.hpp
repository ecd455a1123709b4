#pragma once

// Polynomials whose monomial coefficients are affine functions of named
// decision-variable blocks.  The synthesis stage assembles its constraint
// polynomials in this form; the SOS compiler then matches their coefficients
// against Gram-matrix expansions without ever knowing how the constraints
// were built.

#include <map>
#include <string>

#include "densynth/poly.hpp"

namespace densynth {

class AffinePoly {
 public:
  AffinePoly() = default;
  explicit AffinePoly(Poly constant);

  static AffinePoly zero(int n_vars, int degree);
  // coeff_map has MonomialTable::count(n_vars, degree) rows; the represented
  // polynomial is (coeff_map * d_name)^T m(x) summed with nothing else.
  static AffinePoly decision(const std::string& name, const MatrixXd& coeff_map,
                             int n_vars, int degree);

  int n_vars() const { return constant_.n_vars(); }
  int degree() const { return constant_.degree(); }
  const Poly& constant_part() const { return constant_; }
  // name -> (monomial count x block dim) coefficient jacobian.
  const std::map<std::string, MatrixXd>& terms() const { return terms_; }
  bool depends_on(const std::string& name) const { return terms_.count(name); }

  AffinePoly embedded(int degree) const;
  // Substitutes block values (every named block must be present).
  Poly at(const std::map<std::string, VectorXd>& values) const;

  AffinePoly operator+(const AffinePoly& o) const;
  AffinePoly operator-(const AffinePoly& o) const;
  AffinePoly operator*(double s) const;
  AffinePoly operator-() const { return *this * -1.0; }
  AffinePoly& operator+=(const AffinePoly& o) { return *this = *this + o; }
  AffinePoly& operator-=(const AffinePoly& o) { return *this = *this - o; }

  // Product with a fixed polynomial (degree grows by p's table degree).
  AffinePoly multiplied_by(const Poly& p) const;

 private:
  Poly constant_;  // also fixes the variable count and table degree
  std::map<std::string, MatrixXd> terms_;
};

inline AffinePoly operator*(double s, const AffinePoly& p) { return p * s; }

}  // namespace densynth
