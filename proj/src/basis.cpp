#include "densynth/basis.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace densynth {

std::string to_string(BasisKind kind) {
  return kind == BasisKind::kMonomial ? "monomial" : "legendre";
}

BasisKind basis_kind_from_string(const std::string& s) {
  if (s == "monomial") return BasisKind::kMonomial;
  if (s == "legendre") return BasisKind::kLegendre;
  throw std::invalid_argument("unknown basis kind: " + s);
}

namespace {

// Coefficients of the Legendre polynomial P_d in its own variable, via the
// three-term recurrence (d+1) P_{d+1} = (2d+1) s P_d - d P_{d-1}.
std::vector<std::vector<double>> legendre_coeff_table(int max_degree) {
  std::vector<std::vector<double>> p(max_degree + 1);
  p[0] = {1.0};
  if (max_degree >= 1) p[1] = {0.0, 1.0};
  for (int d = 1; d < max_degree; ++d) {
    std::vector<double> next(d + 2, 0.0);
    for (int i = 0; i <= d; ++i) next[i + 1] += (2.0 * d + 1.0) * p[d][i];
    for (int i = 0; i < d; ++i) next[i] -= d * p[d - 1][i];
    for (double& v : next) v /= (d + 1.0);
    p[d + 1] = std::move(next);
  }
  return p;
}

// Substitute s = scale*x + shift into a univariate polynomial given by coeffs
// in s; returns coefficients in x.
std::vector<double> affine_substitute(const std::vector<double>& coeffs,
                                      double scale, double shift) {
  std::vector<double> out(coeffs.size(), 0.0);
  // Horner in the composed argument: out(x) = sum_p coeffs[p] (scale x + shift)^p.
  std::vector<double> power = {1.0};  // (scale x + shift)^p, ascending
  for (std::size_t p = 0; p < coeffs.size(); ++p) {
    for (std::size_t i = 0; i < power.size(); ++i) out[i] += coeffs[p] * power[i];
    if (p + 1 < coeffs.size()) {
      std::vector<double> next(power.size() + 1, 0.0);
      for (std::size_t i = 0; i < power.size(); ++i) {
        next[i] += shift * power[i];
        next[i + 1] += scale * power[i];
      }
      power = std::move(next);
    }
  }
  return out;
}

}  // namespace

BasisDictionary::BasisDictionary(BasisKind kind, int n_vars, int max_degree,
                                 const VectorXd& domain_lo, const VectorXd& domain_hi)
    : kind_(kind), n_(n_vars), deg_(max_degree), lo_(domain_lo), hi_(domain_hi) {
  if (max_degree < 1)
    throw std::invalid_argument("BasisDictionary: max_degree must be >= 1");
  if (lo_.size() != n_ || hi_.size() != n_)
    throw std::invalid_argument("BasisDictionary: domain box dimension mismatch");
  table_ = MonomialTable::get(n_vars, max_degree);
  const int q = table_->size();

  scale_ = VectorXd::Ones(n_);
  shift_ = VectorXd::Zero(n_);
  if (kind_ == BasisKind::kLegendre) {
    for (int i = 0; i < n_; ++i) {
      const double width = hi_[i] - lo_[i];
      if (!(width > 0))
        throw std::invalid_argument(
            "BasisDictionary: Legendre dictionary requires hi > lo on every axis");
      scale_[i] = 2.0 / width;
      shift_[i] = -(hi_[i] + lo_[i]) / width;
    }
  }

  c_psi_ = MatrixXd::Zero(q, q);
  if (kind_ == BasisKind::kMonomial) {
    c_psi_.setIdentity();
  } else {
    const auto leg = legendre_coeff_table(max_degree);
    // Univariate x-coefficients of P_d(s_i(x_i)) per variable and degree.
    std::vector<std::vector<std::vector<double>>> uni(n_);
    for (int i = 0; i < n_; ++i) {
      uni[i].resize(max_degree + 1);
      for (int d = 0; d <= max_degree; ++d)
        uni[i][d] = affine_substitute(leg[d], scale_[i], shift_[i]);
    }
    for (int k = 0; k < q; ++k) {
      const MultiIndex& ek = table_->exponent(k);
      for (int j = 0; j < q; ++j) {
        const MultiIndex& ej = table_->exponent(j);
        double v = 1.0;
        for (int i = 0; i < n_ && v != 0.0; ++i) {
          v = ej[i] <= ek[i] ? v * uni[i][ek[i]][ej[i]] : 0.0;
        }
        c_psi_(k, j) = v;
      }
    }
  }

  to_dict_.compute(c_psi_.transpose());

  c_x_ = MatrixXd::Zero(q, n_);
  for (int i = 0; i < n_; ++i)
    c_x_.col(i) = from_poly(Poly::variable(n_, i));
}

void BasisDictionary::eval(const Eigen::Ref<const VectorXd>& x, VectorXd& psi) const {
  if (x.size() != n_) throw std::invalid_argument("BasisDictionary::eval: bad point dimension");
  // Per-variable factor values b[i][d]: x_i^d or P_d(s_i(x_i)).
  double b[8][128];
  for (int i = 0; i < n_; ++i) {
    if (kind_ == BasisKind::kMonomial) {
      b[i][0] = 1.0;
      for (int d = 1; d <= deg_; ++d) b[i][d] = b[i][d - 1] * x[i];
    } else {
      const double s = scale_[i] * x[i] + shift_[i];
      b[i][0] = 1.0;
      if (deg_ >= 1) b[i][1] = s;
      for (int d = 1; d < deg_; ++d)
        b[i][d + 1] = ((2.0 * d + 1.0) * s * b[i][d] - d * b[i][d - 1]) / (d + 1.0);
    }
  }
  psi.resize(size());
  for (int k = 0; k < size(); ++k) {
    const MultiIndex& e = table_->exponent(k);
    double v = 1.0;
    for (int i = 0; i < n_; ++i) v *= b[i][e[i]];
    psi[k] = v;
  }
}

void BasisDictionary::eval_grad(const Eigen::Ref<const VectorXd>& x, VectorXd& psi,
                                MatrixXd& grad) const {
  if (x.size() != n_) throw std::invalid_argument("BasisDictionary::eval_grad: bad point dimension");
  double b[8][128];
  double db[8][128];  // d/dx_i of the factor (chain rule included)
  for (int i = 0; i < n_; ++i) {
    if (kind_ == BasisKind::kMonomial) {
      b[i][0] = 1.0;
      db[i][0] = 0.0;
      for (int d = 1; d <= deg_; ++d) {
        b[i][d] = b[i][d - 1] * x[i];
        db[i][d] = d * b[i][d - 1];
      }
    } else {
      const double s = scale_[i] * x[i] + shift_[i];
      b[i][0] = 1.0;
      db[i][0] = 0.0;
      if (deg_ >= 1) {
        b[i][1] = s;
        db[i][1] = scale_[i];
      }
      for (int d = 1; d < deg_; ++d) {
        b[i][d + 1] = ((2.0 * d + 1.0) * s * b[i][d] - d * b[i][d - 1]) / (d + 1.0);
        // P'_{d+1}(s) = P'_{d-1}(s) + (2d+1) P_d(s), then times ds/dx.
        db[i][d + 1] = db[i][d - 1] + (2.0 * d + 1.0) * scale_[i] * b[i][d];
      }
    }
  }
  psi.resize(size());
  grad.resize(size(), n_);
  for (int k = 0; k < size(); ++k) {
    const MultiIndex& e = table_->exponent(k);
    double v = 1.0;
    for (int i = 0; i < n_; ++i) v *= b[i][e[i]];
    psi[k] = v;
    for (int i = 0; i < n_; ++i) {
      double g = db[i][e[i]];
      if (g != 0.0) {
        for (int j = 0; j < n_; ++j)
          if (j != i) g *= b[j][e[j]];
      }
      grad(k, i) = g;
    }
  }
}

Poly BasisDictionary::to_poly(const Eigen::Ref<const VectorXd>& coeffs) const {
  if (coeffs.size() != size())
    throw std::invalid_argument("BasisDictionary::to_poly: coefficient length mismatch");
  Poly p(n_, deg_);
  p.coeffs() = c_psi_.transpose() * coeffs;
  return p;
}

VectorXd BasisDictionary::from_poly(const Poly& p, bool* truncated) const {
  if (p.n_vars() != n_)
    throw std::invalid_argument("BasisDictionary::from_poly: variable count mismatch");
  if (truncated) *truncated = false;
  VectorXd mono = VectorXd::Zero(table_->size());
  const MonomialTable& pt = p.table();
  for (int k = 0; k < pt.size(); ++k) {
    if (p.coeffs()[k] == 0.0) continue;
    int j = table_->index_of(pt.exponent(k));
    if (j < 0) {
      // Coefficient-space least squares against the zero-padded coefficient
      // matrix reduces to dropping monomials above the dictionary degree.
      if (truncated) *truncated = true;
      continue;
    }
    mono[j] = p.coeffs()[k];
  }
  return to_dict_.solve(mono);
}

MatrixXd BasisDictionary::lift_matrix(int deg) const {
  if (deg > deg_)
    throw std::invalid_argument(
        "BasisDictionary::lift_matrix: degree exceeds dictionary degree");
  auto sub = MonomialTable::get(n_, deg);
  MatrixXd embed = MatrixXd::Zero(table_->size(), sub->size());
  for (int j = 0; j < sub->size(); ++j)
    embed(table_->index_of(sub->exponent(j)), j) = 1.0;
  return to_dict_.solve(embed);
}

nlohmann::json BasisDictionary::descriptor() const {
  return {{"kind", to_string(kind_)},
          {"n_vars", n_},
          {"max_degree", deg_},
          {"domain_lo", std::vector<double>(lo_.data(), lo_.data() + n_)},
          {"domain_hi", std::vector<double>(hi_.data(), hi_.data() + n_)}};
}

BasisDictionary BasisDictionary::from_descriptor(const nlohmann::json& j) {
  const int n = j.at("n_vars").get<int>();
  auto lov = j.at("domain_lo").get<std::vector<double>>();
  auto hiv = j.at("domain_hi").get<std::vector<double>>();
  VectorXd lo = Eigen::Map<VectorXd>(lov.data(), n);
  VectorXd hi = Eigen::Map<VectorXd>(hiv.data(), n);
  return BasisDictionary(basis_kind_from_string(j.at("kind").get<std::string>()), n,
                         j.at("max_degree").get<int>(), lo, hi);
}

bool BasisDictionary::same_descriptor(const BasisDictionary& other) const {
  return kind_ == other.kind_ && n_ == other.n_ && deg_ == other.deg_ &&
         lo_ == other.lo_ && hi_ == other.hi_;
}

}  // namespace densynth
