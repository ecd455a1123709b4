#include "densynth/ocp.hpp"

#include <stdexcept>

namespace densynth {

using nlohmann::json;

std::string to_string(CostNorm norm) {
  return norm == CostNorm::kL1 ? "l1" : "l2";
}

CostNorm cost_norm_from_string(const std::string& s) {
  if (s == "l1") return CostNorm::kL1;
  if (s == "l2") return CostNorm::kL2;
  throw std::invalid_argument("unknown cost norm: " + s);
}

Poly default_b(int n_vars) {
  Poly b(n_vars, 2);
  for (int i = 0; i < n_vars; ++i) {
    Poly xi = Poly::variable(n_vars, i);
    b += xi * xi;
  }
  return b;
}

int SynthesisProgram::total_dim() const {
  int d = 0;
  for (const auto& b : blocks) d += b.dim;
  return d;
}

int SynthesisProgram::block_offset(const std::string& name) const {
  int off = 0;
  for (const auto& b : blocks) {
    if (b.name == name) return off;
    off += b.dim;
  }
  return -1;
}

const DecisionBlock& SynthesisProgram::block(const std::string& name) const {
  for (const auto& b : blocks)
    if (b.name == name) return b;
  throw std::invalid_argument("unknown decision block: " + name);
}

std::map<std::string, VectorXd> SynthesisProgram::split(const VectorXd& x) const {
  if (x.size() != total_dim())
    throw std::invalid_argument("split: stacked vector has wrong length");
  std::map<std::string, VectorXd> out;
  int off = 0;
  for (const auto& b : blocks) {
    out[b.name] = x.segment(off, b.dim);
    off += b.dim;
  }
  return out;
}

namespace {

// Dictionary-coefficient jacobian of a decision polynomial of degree `deg`
// written over the monomial table of the same degree: column i holds the
// monomial coefficients of dictionary function psi_i.
MatrixXd monomial_map(const BasisDictionary& dict, int deg) {
  const int dim = MonomialTable::count(dict.n_vars(), deg);
  return dict.c_psi().topLeftCorner(dim, dim).transpose();
}

Poly degree_trimmed(const Poly& p, int deg) {
  Poly out = p;
  for (int e = 0; e < out.table().size(); ++e)
    if (out.table().total_degree(e) > deg) out.coeffs()[e] = 0.0;
  return out.trimmed(0.0);
}

}  // namespace

SynthesisProgram build_program(const GeneratorSet& gens, const OcpOptions& opt) {
  const BasisDictionary& dict = gens.dict;
  const int n = dict.n_vars();
  const int q_dim = dict.size();
  const int maxdeg = dict.max_degree();
  const int m = gens.n_inputs();
  if (m < 1) throw std::invalid_argument("build_program: no input channels");
  if (opt.alpha < 0) throw std::invalid_argument("build_program: alpha < 0");
  if (opt.deg_a < 0 || opt.deg_c < 0 || opt.deg_s < 0)
    throw std::invalid_argument("build_program: negative degree");
  if (opt.domain.dim() != n || opt.excluded.dim() != n)
    throw std::invalid_argument("build_program: box dimension mismatch");

  const Poly b = default_b(n);
  const int deg_b = b.degree();
  if (opt.deg_a + deg_b > maxdeg)
    throw std::invalid_argument(
        "build_program: deg(a*b) exceeds the dictionary degree");
  if (opt.deg_c + deg_b > maxdeg)
    throw std::invalid_argument(
        "build_program: deg(c*b) exceeds the dictionary degree");

  MatrixXd r_cost = opt.R.size() ? opt.R : MatrixXd::Identity(m, m);
  if (r_cost.rows() != m || r_cost.cols() != m)
    throw std::invalid_argument("build_program: R shape mismatch");
  Eigen::LLT<MatrixXd> r_llt(r_cost);
  if (r_llt.info() != Eigen::Success)
    throw std::invalid_argument("build_program: R is not positive definite");
  const MatrixXd r_inv = r_llt.solve(MatrixXd::Identity(m, m));

  Poly q_cost = opt.q.n_vars() == n ? opt.q : default_b(n);

  // Projected divergence-form operators for the drift and each input field.
  json trunc_meta;
  std::vector<int> trunc0;
  const MatrixXd p0 = transport_matrix(
      dict, gens.L_drift, divergence_of_field(gens.drift_field()), &trunc0);
  trunc_meta["drift"] = trunc0;
  std::vector<MatrixXd> pj;
  for (int j = 0; j < m; ++j) {
    std::vector<int> truncj;
    pj.push_back(transport_matrix(dict, gens.K_input[j],
                                  divergence_of_field(gens.input_field(j)),
                                  &truncj));
    trunc_meta["input" + std::to_string(j + 1)] = truncj;
  }

  const int dim_a = MonomialTable::count(n, opt.deg_a);
  const int dim_c = MonomialTable::count(n, opt.deg_c);
  const int dim_s = MonomialTable::count(n, opt.deg_s);
  const int deg_t = maxdeg + deg_b;
  const int rows_t = MonomialTable::count(n, deg_t);

  // One column of the transport polynomial per decision coefficient:
  //   (1+alpha) b div(h psi_i) - alpha div(h (psi_i b)) [- gamma psi_i b].
  auto transport_columns = [&](const MatrixXd& p_op, int dim, double gamma) {
    MatrixXd cols(rows_t, dim);
    for (int i = 0; i < dim; ++i) {
      const VectorXd unit = VectorXd::Unit(q_dim, i);
      Poly psi_i = dict.to_poly(unit);
      Poly term = (1.0 + opt.alpha) * (b * dict.to_poly(p_op.transpose() * unit));
      bool trunc = false;
      VectorXd lifted = dict.from_poly(psi_i * b, &trunc);
      if (trunc)
        throw std::invalid_argument(
            "build_program: product with b leaves the dictionary");
      term = term - static_cast<double>(opt.alpha) *
                        dict.to_poly(p_op.transpose() * lifted);
      if (gamma != 0.0) term = term - gamma * (psi_i * b);
      cols.col(i) = term.embedded(deg_t).coeffs();
    }
    return cols;
  };

  SynthesisProgram prog;
  prog.blocks.push_back({"a", dim_a});
  for (int j = 0; j < m; ++j)
    prog.blocks.push_back({"c" + std::to_string(j + 1), dim_c});

  AffinePoly transport = AffinePoly::decision(
      "a", transport_columns(p0, dim_a, opt.gamma), n, deg_t);
  for (int j = 0; j < m; ++j)
    transport += AffinePoly::decision("c" + std::to_string(j + 1),
                                      transport_columns(pj[j], dim_c, 0.0), n,
                                      deg_t);
  prog.sos.push_back({"transport", {{transport}}});

  AffinePoly a_poly =
      AffinePoly::decision("a", monomial_map(dict, opt.deg_a), n, opt.deg_a);
  prog.sos.push_back({"density", {{a_poly}}});

  std::vector<AffinePoly> c_polys;
  for (int j = 0; j < m; ++j)
    c_polys.push_back(AffinePoly::decision("c" + std::to_string(j + 1),
                                           monomial_map(dict, opt.deg_c), n,
                                           opt.deg_c));

  // Moment vectors against the singular weight.
  const VectorXd d_cost = quadrature_moments(dict, q_cost, b, opt.alpha,
                                             opt.domain, opt.excluded);
  const VectorXd d_one = quadrature_moments(dict, Poly::constant(n, 1.0), b,
                                            opt.alpha, opt.domain, opt.excluded);

  prog.objective["a"] = d_cost.head(dim_a);

  // Normalization: integral of (a - 1)/b^alpha over X \ N vanishes.  This
  // pins the scale of the homogeneous feasible cone.
  LinearEquality mass;
  mass.label = "mass";
  mass.terms["a"] = d_one.head(dim_a).transpose();
  mass.rhs = d_one[0];
  prog.equalities.push_back(mass);

  if (opt.norm == CostNorm::kL1) {
    for (int j = 0; j < m; ++j) {
      const std::string sj = "s" + std::to_string(j + 1);
      prog.blocks.push_back({sj, dim_s});
      AffinePoly s_poly = AffinePoly::decision(sj, monomial_map(dict, opt.deg_s),
                                               n, opt.deg_s);
      prog.objective[sj] = opt.beta * d_one.head(dim_s);
      prog.sos.push_back({sj + "+" + "c", {{s_poly + c_polys[j]}}});
      prog.sos.push_back({sj + "-" + "c", {{s_poly - c_polys[j]}}});
    }
  } else {
    prog.blocks.push_back({"w", q_dim});
    AffinePoly w_poly =
        AffinePoly::decision("w", dict.c_psi().transpose(), n, maxdeg);
    prog.objective["w"] = opt.beta * d_one;
    // [[w, c^T], [c, a R^{-1}]] >= 0 enforces w >= c^T R^{-1} c / a.
    MatrixSosConstraint ratio;
    ratio.label = "input_energy";
    ratio.entries.assign(m + 1, std::vector<AffinePoly>(m + 1));
    ratio.entries[0][0] = w_poly;
    for (int j = 0; j < m; ++j) {
      ratio.entries[0][j + 1] = c_polys[j];
      ratio.entries[j + 1][0] = c_polys[j];
      for (int k = 0; k < m; ++k)
        ratio.entries[j + 1][k + 1] = r_inv(j, k) * a_poly;
    }
    prog.sos.push_back(std::move(ratio));
  }

  if (opt.input_bound) {
    if (opt.norm != CostNorm::kL2)
      throw std::invalid_argument("build_program: input bound requires l2");
    Poly b_alpha = pow(b, opt.alpha);
    MatrixSosConstraint bound;
    bound.label = "input_bound";
    bound.entries.assign(m + 1, std::vector<AffinePoly>(m + 1));
    bound.entries[0][0] = (*opt.input_bound) * a_poly.multiplied_by(b_alpha);
    for (int j = 0; j < m; ++j) {
      bound.entries[0][j + 1] = c_polys[j];
      bound.entries[j + 1][0] = c_polys[j];
      for (int k = 0; k < m; ++k)
        bound.entries[j + 1][k + 1] =
            AffinePoly(Poly::constant(n, j == k ? 1.0 : 0.0));
    }
    prog.sos.push_back(std::move(bound));
  }

  json meta;
  meta["norm"] = to_string(opt.norm);
  meta["alpha"] = opt.alpha;
  meta["beta"] = opt.beta;
  meta["gamma"] = opt.gamma;
  meta["deg_a"] = opt.deg_a;
  meta["deg_c"] = opt.deg_c;
  meta["deg_s"] = opt.deg_s;
  meta["deg_transport"] = deg_t;
  meta["dictionary"] = dict.descriptor();
  meta["truncated_rows"] = trunc_meta;
  meta["mass_rhs"] = mass.rhs;
  prog.metadata = std::move(meta);
  return prog;
}

}  // namespace densynth
