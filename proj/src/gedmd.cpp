#include "densynth/gedmd.hpp"

#include <Eigen/SVD>
#include <stdexcept>

#include "densynth/jsonio.hpp"

namespace densynth {

using nlohmann::json;

GramPair assemble_gram(const BasisDictionary& dict,
                       const TrajectoryDataset& ds) {
  if (ds.n != dict.n_vars())
    throw std::invalid_argument("assemble_gram: dataset dimension mismatch");
  if (ds.samples() == 0)
    throw std::invalid_argument("assemble_gram: empty dataset");
  const int q = dict.size();
  GramPair gp;
  gp.A = MatrixXd::Zero(q, q);
  gp.B = MatrixXd::Zero(q, q);
  gp.samples = ds.samples();
  VectorXd psi(q), dpsi(q);
  MatrixXd grad(q, ds.n);
  for (int k = 0; k < ds.samples(); ++k) {
    dict.eval_grad(ds.x.col(k), psi, grad);
    dpsi.noalias() = grad * ds.xdot.col(k);
    gp.A.selfadjointView<Eigen::Lower>().rankUpdate(psi, 1.0);
    gp.B.noalias() += psi * dpsi.transpose();
  }
  gp.A = gp.A.selfadjointView<Eigen::Lower>();
  gp.A /= static_cast<double>(gp.samples);
  gp.B /= static_cast<double>(gp.samples);
  return gp;
}

double SpectrumReport::cond() const {
  return min_sv > 0 ? max_sv / min_sv
                    : std::numeric_limits<double>::infinity();
}

MatrixXd estimate_generator(const GramPair& gp, double ridge,
                            SpectrumReport* report) {
  const int q = static_cast<int>(gp.A.rows());
  if (gp.B.rows() != q || gp.B.cols() != q)
    throw std::invalid_argument("estimate_generator: shape mismatch");
  Eigen::BDCSVD<MatrixXd> svd(gp.A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const double cutoff = 1e-10 * (sv.size() ? sv[0] : 0.0);
  if (report) {
    report->max_sv = sv.size() ? sv[0] : 0.0;
    report->min_sv = sv.size() ? sv[sv.size() - 1] : 0.0;
    report->rank = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > cutoff) ++report->rank;
  }
  MatrixXd lt(q, q);
  if (ridge > 0.0) {
    MatrixXd reg = gp.A;
    reg.diagonal().array() += ridge;
    lt = reg.ldlt().solve(gp.B);
  } else {
    VectorXd inv = VectorXd::Zero(sv.size());
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > cutoff) inv[i] = 1.0 / sv[i];
    lt.noalias() = svd.matrixV() * inv.asDiagonal() *
                   svd.matrixU().transpose() * gp.B;
  }
  return lt.transpose();
}

GeneratorSet estimate_generators(const BasisDictionary& dict,
                                 const std::vector<TrajectoryDataset>& sets,
                                 double ridge) {
  if (sets.empty())
    throw std::invalid_argument("estimate_generators: no datasets");
  json meta;
  meta["source"] = "data";
  meta["ridge"] = ridge;
  meta["sets"] = json::array();
  std::vector<MatrixXd> ls;
  ls.reserve(sets.size());
  for (const auto& ds : sets) {
    GramPair gp = assemble_gram(dict, ds);
    SpectrumReport rep;
    ls.push_back(estimate_generator(gp, ridge, &rep));
    meta["sets"].push_back({{"label", ds.input_label},
                            {"samples", gp.samples},
                            {"rank", rep.rank},
                            {"max_sv", rep.max_sv},
                            {"min_sv", rep.min_sv},
                            {"cond", rep.cond()}});
  }
  GeneratorSet gen{dict, std::move(ls[0]), {}, std::move(meta)};
  for (std::size_t j = 1; j < ls.size(); ++j)
    gen.K_input.push_back(ls[j] - gen.L_drift);
  return gen;
}

GeneratorSet symbolic_generators(const BasisDictionary& dict,
                                 const ControlAffineSystem& sys) {
  if (!sys.is_polynomial())
    throw std::invalid_argument(
        "symbolic_generators: system has no polynomial form");
  if (sys.n != dict.n_vars())
    throw std::invalid_argument("symbolic_generators: dimension mismatch");
  const int q = dict.size();
  auto project_field = [&](const std::vector<Poly>& field,
                           std::vector<int>& truncated) {
    MatrixXd l(q, q);
    for (int k = 0; k < q; ++k) {
      Poly psi_k = dict.to_poly(VectorXd::Unit(q, k));
      Poly image = Poly::constant(sys.n, 0.0);
      for (int i = 0; i < sys.n; ++i)
        image = image + field[i] * psi_k.derivative(i);
      bool trunc = false;
      l.row(k) = dict.from_poly(image, &trunc).transpose();
      if (trunc) truncated.push_back(k);
    }
    return l;
  };
  json meta;
  meta["source"] = "symbolic";
  std::vector<int> trunc_drift;
  MatrixXd l0 = project_field(sys.drift_poly, trunc_drift);
  meta["truncated_rows"]["drift"] = trunc_drift;
  GeneratorSet gen{dict, std::move(l0), {}, {}};
  for (int j = 0; j < sys.m; ++j) {
    std::vector<int> trunc_j;
    gen.K_input.push_back(project_field(sys.input_poly[j], trunc_j));
    meta["truncated_rows"]["input" + std::to_string(j + 1)] = trunc_j;
  }
  gen.metadata = std::move(meta);
  return gen;
}

std::vector<Poly> field_from_generator(const BasisDictionary& dict,
                                       const MatrixXd& K) {
  MatrixXd coeffs = K.transpose() * dict.c_x();  // Q x n
  std::vector<Poly> field;
  for (int i = 0; i < dict.n_vars(); ++i)
    field.push_back(dict.to_poly(coeffs.col(i)));
  return field;
}

std::vector<Poly> GeneratorSet::drift_field() const {
  return field_from_generator(dict, L_drift);
}

std::vector<Poly> GeneratorSet::input_field(int j) const {
  return field_from_generator(dict, K_input.at(j));
}

MatrixXd transport_matrix(const BasisDictionary& dict, const MatrixXd& K_field,
                          const Poly& divergence,
                          std::vector<int>* truncated_rows) {
  const int q = dict.size();
  if (K_field.rows() != q || K_field.cols() != q)
    throw std::invalid_argument("transport_matrix: generator shape mismatch");
  MatrixXd p = K_field;
  if (divergence.is_zero()) return p;
  for (int k = 0; k < q; ++k) {
    Poly prod = divergence * dict.to_poly(VectorXd::Unit(q, k));
    bool trunc = false;
    p.row(k) += dict.from_poly(prod, &trunc).transpose();
    if (trunc && truncated_rows) truncated_rows->push_back(k);
  }
  return p;
}

LinearModel identify_linear(const GeneratorSet& gen) {
  const int n = gen.dict.n_vars();
  LinearModel lm;
  lm.A = MatrixXd(n, n);
  lm.B = MatrixXd(n, gen.n_inputs());
  lm.offset = VectorXd(n);
  const VectorXd origin = VectorXd::Zero(n);
  auto drift = gen.drift_field();
  for (int i = 0; i < n; ++i) {
    lm.offset[i] = drift[i].eval(origin);
    for (int j = 0; j < n; ++j) lm.A(i, j) = drift[i].derivative(j).eval(origin);
  }
  for (int j = 0; j < gen.n_inputs(); ++j) {
    auto gj = gen.input_field(j);
    for (int i = 0; i < n; ++i) lm.B(i, j) = gj[i].eval(origin);
  }
  return lm;
}

void GeneratorSet::save(const std::string& path) const {
  json j;
  j["basis"] = dict.descriptor();
  j["L_drift"] = matrix_to_json(L_drift);
  j["K_input"] = json::array();
  for (const auto& k : K_input) j["K_input"].push_back(matrix_to_json(k));
  j["metadata"] = metadata;
  write_json_file(path, j);
}

GeneratorSet GeneratorSet::load(const std::string& path) {
  json j = read_json_file(path);
  GeneratorSet gen{BasisDictionary::from_descriptor(j.at("basis")),
                   matrix_from_json(j.at("L_drift")),
                   {},
                   j.value("metadata", json::object())};
  for (const auto& k : j.at("K_input")) gen.K_input.push_back(matrix_from_json(k));
  const int q = gen.dict.size();
  if (gen.L_drift.rows() != q || gen.L_drift.cols() != q)
    throw std::runtime_error("generator file: matrix size mismatch");
  return gen;
}

}  // namespace densynth
