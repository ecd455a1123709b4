#include "densynth/affine_poly.hpp"

#include <stdexcept>

namespace densynth {

AffinePoly::AffinePoly(Poly constant) : constant_(std::move(constant)) {}

AffinePoly AffinePoly::zero(int n_vars, int degree) {
  return AffinePoly(Poly(n_vars, degree));
}

AffinePoly AffinePoly::decision(const std::string& name,
                                const MatrixXd& coeff_map, int n_vars,
                                int degree) {
  if (coeff_map.rows() != MonomialTable::count(n_vars, degree))
    throw std::invalid_argument("AffinePoly::decision: coeff_map row mismatch");
  AffinePoly p = zero(n_vars, degree);
  p.terms_[name] = coeff_map;
  return p;
}

AffinePoly AffinePoly::embedded(int degree) const {
  if (degree < this->degree())
    throw std::invalid_argument("AffinePoly::embedded: degree too small");
  AffinePoly out(constant_.embedded(degree));
  const int rows = MonomialTable::count(n_vars(), degree);
  for (const auto& [name, jac] : terms_) {
    MatrixXd raised = MatrixXd::Zero(rows, jac.cols());
    raised.topRows(jac.rows()) = jac;  // graded order nests lower degrees first
    out.terms_[name] = std::move(raised);
  }
  return out;
}

Poly AffinePoly::at(const std::map<std::string, VectorXd>& values) const {
  Poly out = constant_;
  for (const auto& [name, jac] : terms_) {
    auto it = values.find(name);
    if (it == values.end())
      throw std::invalid_argument("AffinePoly::at: missing block " + name);
    if (it->second.size() != jac.cols())
      throw std::invalid_argument("AffinePoly::at: block size mismatch " + name);
    out.coeffs() += jac * it->second;
  }
  return out;
}

AffinePoly AffinePoly::operator+(const AffinePoly& o) const {
  const int deg = std::max(degree(), o.degree());
  AffinePoly a = embedded(deg), b = o.embedded(deg);
  a.constant_ = a.constant_ + b.constant_;
  for (const auto& [name, jac] : b.terms_) {
    auto it = a.terms_.find(name);
    if (it == a.terms_.end()) {
      a.terms_[name] = jac;
    } else {
      if (it->second.cols() != jac.cols())
        throw std::invalid_argument("AffinePoly: block dim mismatch " + name);
      it->second += jac;
    }
  }
  return a;
}

AffinePoly AffinePoly::operator-(const AffinePoly& o) const {
  return *this + o * -1.0;
}

AffinePoly AffinePoly::operator*(double s) const {
  AffinePoly out(constant_ * s);
  for (const auto& [name, jac] : terms_) out.terms_[name] = jac * s;
  return out;
}

AffinePoly AffinePoly::multiplied_by(const Poly& p) const {
  if (p.n_vars() != n_vars())
    throw std::invalid_argument("AffinePoly::multiplied_by: variable mismatch");
  MatrixXd mul = multiplication_matrix(p, degree());
  AffinePoly out(constant_ * p);
  out.constant_ = out.constant_.embedded(degree() + p.degree());
  for (const auto& [name, jac] : terms_) out.terms_[name] = mul * jac;
  return out;
}

}  // namespace densynth
