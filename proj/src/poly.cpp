#include "densynth/poly.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace densynth {

namespace {

// Emit all exponent vectors of total degree exactly d, lexicographic with the
// first variable most significant (descending exponent).
void emit_degree(int n, int d, MultiIndex& scratch, int var, int remaining,
                 std::vector<MultiIndex>& out) {
  if (var == n - 1) {
    scratch[var] = remaining;
    out.push_back(scratch);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    scratch[var] = e;
    emit_degree(n, d, scratch, var + 1, remaining - e, out);
  }
}

}  // namespace

MonomialTable::MonomialTable(int n_vars, int degree) : n_(n_vars), deg_(degree) {
  if (n_vars < 1 || n_vars > 8)
    throw std::invalid_argument("MonomialTable: n_vars must be in [1,8]");
  if (degree < 0 || degree > 120)
    throw std::invalid_argument("MonomialTable: degree must be in [0,120]");
  MultiIndex scratch(n_vars, 0);
  for (int d = 0; d <= degree; ++d) emit_degree(n_vars, d, scratch, 0, d, exps_);
  degs_.reserve(exps_.size());
  lookup_.reserve(exps_.size());
  for (int k = 0; k < static_cast<int>(exps_.size()); ++k) {
    int d = 0;
    for (int e : exps_[k]) d += e;
    degs_.push_back(d);
    lookup_.emplace(key_of(exps_[k]), k);
  }
}

std::shared_ptr<const MonomialTable> MonomialTable::get(int n_vars, int degree) {
  static std::map<std::pair<int, int>, std::shared_ptr<const MonomialTable>> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{n_vars, degree}];
  if (!slot) slot = std::make_shared<MonomialTable>(n_vars, degree);
  return slot;
}

std::uint64_t MonomialTable::key_of(const MultiIndex& e) {
  std::uint64_t key = 0;
  for (std::size_t i = 0; i < e.size(); ++i)
    key |= static_cast<std::uint64_t>(e[i] & 0xff) << (8 * i);
  return key;
}

int MonomialTable::index_of(const MultiIndex& e) const {
  if (static_cast<int>(e.size()) != n_) return -1;
  for (int v : e)
    if (v < 0) return -1;
  auto it = lookup_.find(key_of(e));
  return it == lookup_.end() ? -1 : it->second;
}

void MonomialTable::eval(const Eigen::Ref<const VectorXd>& x, VectorXd& out) const {
  if (x.size() != n_) throw std::invalid_argument("MonomialTable::eval: bad point dimension");
  double pw[8][128];
  for (int i = 0; i < n_; ++i) {
    pw[i][0] = 1.0;
    for (int d = 1; d <= deg_; ++d) pw[i][d] = pw[i][d - 1] * x[i];
  }
  out.resize(size());
  for (int k = 0; k < size(); ++k) {
    double v = 1.0;
    const MultiIndex& e = exps_[k];
    for (int i = 0; i < n_; ++i) v *= pw[i][e[i]];
    out[k] = v;
  }
}

int MonomialTable::count(int n_vars, int degree) {
  // C(n_vars + degree, n_vars)
  long long num = 1;
  for (int i = 1; i <= n_vars; ++i) num = num * (degree + i) / i;
  return static_cast<int>(num);
}

// ---------------------------------------------------------------------------

Poly::Poly(int n_vars, int degree)
    : table_(MonomialTable::get(n_vars, degree)),
      coeffs_(VectorXd::Zero(table_->size())) {}

Poly Poly::constant(int n_vars, double value) {
  Poly p(n_vars, 0);
  p.coeffs_[0] = value;
  return p;
}

Poly Poly::variable(int n_vars, int i) {
  if (i < 0 || i >= n_vars) throw std::invalid_argument("Poly::variable: index out of range");
  Poly p(n_vars, 1);
  MultiIndex e(n_vars, 0);
  e[i] = 1;
  p.set_coeff(e, 1.0);
  return p;
}

Poly Poly::from_terms(int n_vars,
                      const std::vector<std::pair<MultiIndex, double>>& terms) {
  int deg = 0;
  for (const auto& [e, v] : terms) {
    (void)v;
    int d = 0;
    for (int q : e) d += q;
    deg = std::max(deg, d);
  }
  Poly p(n_vars, deg);
  for (const auto& [e, v] : terms) p.set_coeff(e, p.coeff(e) + v);
  return p;
}

int Poly::actual_degree() const {
  if (!table_) return 0;
  int deg = 0;
  for (int k = 0; k < table_->size(); ++k)
    if (coeffs_[k] != 0.0) deg = std::max(deg, table_->total_degree(k));
  return deg;
}

double Poly::coeff(const MultiIndex& e) const {
  if (!table_) return 0.0;
  int k = table_->index_of(e);
  return k < 0 ? 0.0 : coeffs_[k];
}

void Poly::set_coeff(const MultiIndex& e, double v) {
  int k = table_ ? table_->index_of(e) : -1;
  if (k < 0) throw std::out_of_range("Poly::set_coeff: exponent outside table");
  coeffs_[k] = v;
}

double Poly::eval(const Eigen::Ref<const VectorXd>& x) const {
  if (!table_) return 0.0;
  double pw[8][128];
  const int n = table_->n_vars();
  const int deg = table_->degree();
  for (int i = 0; i < n; ++i) {
    pw[i][0] = 1.0;
    for (int d = 1; d <= deg; ++d) pw[i][d] = pw[i][d - 1] * x[i];
  }
  double acc = 0.0;
  for (int k = 0; k < table_->size(); ++k) {
    if (coeffs_[k] == 0.0) continue;
    double v = coeffs_[k];
    const MultiIndex& e = table_->exponent(k);
    for (int i = 0; i < n; ++i) v *= pw[i][e[i]];
    acc += v;
  }
  return acc;
}

Poly Poly::derivative(int var) const {
  if (!table_) return Poly();
  if (var < 0 || var >= n_vars()) throw std::invalid_argument("Poly::derivative: bad variable");
  Poly out(n_vars(), std::max(0, degree() - 1));
  for (int k = 0; k < table_->size(); ++k) {
    if (coeffs_[k] == 0.0 || table_->exponent(k)[var] == 0) continue;
    MultiIndex e = table_->exponent(k);
    const double factor = e[var];
    e[var] -= 1;
    int j = out.table_->index_of(e);
    out.coeffs_[j] += factor * coeffs_[k];
  }
  return out;
}

Poly Poly::embedded(int degree) const {
  if (!table_) throw std::logic_error("Poly::embedded: empty polynomial");
  if (degree < this->degree())
    throw std::invalid_argument("Poly::embedded: target degree too small");
  Poly out(n_vars(), degree);
  for (int k = 0; k < table_->size(); ++k)
    if (coeffs_[k] != 0.0) out.coeffs_[out.table_->index_of(table_->exponent(k))] = coeffs_[k];
  return out;
}

Poly Poly::trimmed(double tol) const {
  if (!table_) return Poly();
  int deg = 0;
  for (int k = 0; k < table_->size(); ++k)
    if (std::abs(coeffs_[k]) > tol) deg = std::max(deg, table_->total_degree(k));
  Poly out(n_vars(), deg);
  for (int k = 0; k < table_->size(); ++k) {
    if (std::abs(coeffs_[k]) <= tol) continue;
    out.coeffs_[out.table_->index_of(table_->exponent(k))] = coeffs_[k];
  }
  return out;
}

Poly Poly::operator+(const Poly& o) const {
  if (!table_) return o;
  if (!o.table_) return *this;
  if (n_vars() != o.n_vars()) throw std::invalid_argument("Poly::+: variable count mismatch");
  Poly out(n_vars(), std::max(degree(), o.degree()));
  for (int k = 0; k < table_->size(); ++k)
    if (coeffs_[k] != 0.0) out.coeffs_[out.table_->index_of(table_->exponent(k))] += coeffs_[k];
  for (int k = 0; k < o.table_->size(); ++k)
    if (o.coeffs_[k] != 0.0)
      out.coeffs_[out.table_->index_of(o.table_->exponent(k))] += o.coeffs_[k];
  return out;
}

Poly Poly::operator-(const Poly& o) const { return *this + (o * -1.0); }

Poly Poly::operator*(const Poly& o) const {
  if (!table_ || !o.table_) return Poly();
  if (n_vars() != o.n_vars()) throw std::invalid_argument("Poly::*: variable count mismatch");
  Poly out(n_vars(), degree() + o.degree());
  MultiIndex e(n_vars());
  for (int k = 0; k < table_->size(); ++k) {
    if (coeffs_[k] == 0.0) continue;
    const MultiIndex& ek = table_->exponent(k);
    for (int j = 0; j < o.table_->size(); ++j) {
      if (o.coeffs_[j] == 0.0) continue;
      const MultiIndex& ej = o.table_->exponent(j);
      for (int i = 0; i < n_vars(); ++i) e[i] = ek[i] + ej[i];
      out.coeffs_[out.table_->index_of(e)] += coeffs_[k] * o.coeffs_[j];
    }
  }
  return out;
}

Poly Poly::operator*(double s) const {
  Poly out = *this;
  out.coeffs_ *= s;
  return out;
}

bool Poly::is_zero(double tol) const {
  if (!table_) return true;
  for (int k = 0; k < table_->size(); ++k)
    if (std::abs(coeffs_[k]) > tol) return false;
  return true;
}

std::string Poly::to_string(int precision) const {
  if (!table_) return "0";
  std::ostringstream os;
  os.precision(precision);
  bool first = true;
  for (int k = 0; k < table_->size(); ++k) {
    double v = coeffs_[k];
    if (v == 0.0) continue;
    if (first) {
      if (v < 0) os << "-";
    } else {
      os << (v < 0 ? " - " : " + ");
    }
    first = false;
    const MultiIndex& e = table_->exponent(k);
    const bool is_const = table_->total_degree(k) == 0;
    const double mag = std::abs(v);
    if (mag != 1.0 || is_const) os << mag;
    bool printed = mag != 1.0 || is_const;
    for (int i = 0; i < n_vars(); ++i) {
      if (e[i] == 0) continue;
      if (printed) os << "*";
      os << "x" << (i + 1);
      if (e[i] > 1) os << "^" << e[i];
      printed = true;
    }
  }
  if (first) return "0";
  return os.str();
}

Poly pow(const Poly& p, int k) {
  if (k < 0) throw std::invalid_argument("pow(Poly): negative exponent");
  Poly out = Poly::constant(p.n_vars() > 0 ? p.n_vars() : 1, 1.0);
  for (int i = 0; i < k; ++i) out = out * p;
  return out;
}

Poly divergence_of_field(const std::vector<Poly>& field) {
  if (field.empty()) throw std::invalid_argument("divergence_of_field: empty field");
  const int n = static_cast<int>(field.size());
  Poly div = Poly::constant(field[0].n_vars(), 0.0);
  for (int i = 0; i < n; ++i) {
    if (field[i].n_vars() != field[0].n_vars() || field[i].n_vars() < n)
      throw std::invalid_argument("divergence_of_field: inconsistent dimensions");
    div += field[i].derivative(i);
  }
  return div;
}

MatrixXd multiplication_matrix(const Poly& p, int in_degree) {
  const int n = p.n_vars();
  auto in = MonomialTable::get(n, in_degree);
  auto out = MonomialTable::get(n, in_degree + p.degree());
  MatrixXd m = MatrixXd::Zero(out->size(), in->size());
  MultiIndex e(n);
  for (int k = 0; k < p.table().size(); ++k) {
    if (p.coeffs()[k] == 0.0) continue;
    const MultiIndex& ep = p.table().exponent(k);
    for (int j = 0; j < in->size(); ++j) {
      const MultiIndex& ej = in->exponent(j);
      for (int i = 0; i < n; ++i) e[i] = ep[i] + ej[i];
      m(out->index_of(e), j) += p.coeffs()[k];
    }
  }
  return m;
}

nlohmann::json poly_to_json(const Poly& p) {
  nlohmann::json j;
  j["basis"] = {{"kind", "monomial"}, {"n_vars", p.n_vars()}, {"degree", p.degree()}};
  j["coeffs"] = std::vector<double>(p.coeffs().data(), p.coeffs().data() + p.coeffs().size());
  return j;
}

Poly poly_from_json(const nlohmann::json& j) {
  const auto& b = j.at("basis");
  if (b.at("kind").get<std::string>() != "monomial")
    throw std::invalid_argument("poly_from_json: expected monomial basis descriptor");
  Poly p(b.at("n_vars").get<int>(), b.at("degree").get<int>());
  auto coeffs = j.at("coeffs").get<std::vector<double>>();
  if (static_cast<int>(coeffs.size()) != p.table().size())
    throw std::invalid_argument("poly_from_json: coefficient count mismatch");
  for (int k = 0; k < p.table().size(); ++k) p.coeffs()[k] = coeffs[k];
  return p;
}

}  // namespace densynth
