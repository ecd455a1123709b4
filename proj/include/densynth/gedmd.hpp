#pragma once

// Generator estimation from trajectory data.  From sampled states and state
// derivatives we form empirical Gram matrices over a basis dictionary and
// solve a least-squares problem for the matrix representation of the
// differential generator K psi = f . grad psi.  Datasets recorded under
// constant step inputs yield the generators of the individual input channels
// by subtraction.  The transport (divergence-form) operator used by the
// synthesis stage is the generator plus a multiplication-by-divergence term.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densynth/basis.hpp"
#include "densynth/systems.hpp"
#include "densynth/trajectory.hpp"

namespace densynth {

// Empirical moment matrices: A = (1/T) sum psi(x_t) psi(x_t)^T and
// B = (1/T) sum psi(x_t) dpsi(x_t)^T where dpsi_k = grad psi_k . xdot.
struct GramPair {
  MatrixXd A;
  MatrixXd B;
  int samples = 0;
};

GramPair assemble_gram(const BasisDictionary& dict, const TrajectoryDataset& ds);

struct SpectrumReport {
  double max_sv = 0.0;
  double min_sv = 0.0;
  int rank = 0;
  double cond() const;
};

// Least-squares generator in row convention: row k holds the dictionary
// coefficients of K psi_k, so (K Psi)(x) = L Psi(x).  With ridge == 0 the
// pseudo-inverse uses an SVD cutoff of 1e-10 * sigma_max; ridge > 0 solves
// (A + ridge I) L^T = B instead.
MatrixXd estimate_generator(const GramPair& gp, double ridge = 0.0,
                            SpectrumReport* report = nullptr);

// Generators of the drift field and of each input channel over one dictionary.
struct GeneratorSet {
  BasisDictionary dict;
  MatrixXd L_drift;               // generator of the drift field f
  std::vector<MatrixXd> K_input;  // generators of the input fields g_j
  nlohmann::json metadata;

  int n_inputs() const { return static_cast<int>(K_input.size()); }

  // Vector field recovered from a generator matrix via the coordinate rows.
  std::vector<Poly> drift_field() const;
  std::vector<Poly> input_field(int j) const;

  void save(const std::string& path) const;
  static GeneratorSet load(const std::string& path);
};

// Estimates generators from the standard excitation protocol output: sets[0]
// is the unforced dataset and sets[1..m] were recorded under the constant
// input e_j.  K_input[j] is the difference of the forced and unforced
// generators.  Conditioning data and sample counts land in metadata.
GeneratorSet estimate_generators(const BasisDictionary& dict,
                                 const std::vector<TrajectoryDataset>& sets,
                                 double ridge = 0.0);

// Exact Galerkin generators for a polynomial system: row k of L is the
// dictionary expansion of f . grad psi_k (and likewise per input channel).
// Rows whose image exceeds the dictionary degree are truncated and recorded
// in metadata["truncated_rows"].
GeneratorSet symbolic_generators(const BasisDictionary& dict,
                                 const ControlAffineSystem& sys);

// Monomial form of the field h = sum_k coeffs_k psi_k read off a generator:
// column i of K^T c_x gives the dictionary coefficients of h_i = K x_i.
std::vector<Poly> field_from_generator(const BasisDictionary& dict,
                                       const MatrixXd& K);

// Divergence-form operator P with row k = dictionary coefficients of
// div(h psi_k) = K_h psi_k + (div h) psi_k.  Rows where the product
// (div h) * psi_k exceeds the dictionary degree are truncated and their
// indices appended to *truncated_rows when given.
MatrixXd transport_matrix(const BasisDictionary& dict, const MatrixXd& K_field,
                          const Poly& divergence,
                          std::vector<int>* truncated_rows = nullptr);

// Linearization at the origin read off a generator set: A(i,j) is the
// gradient of the recovered drift component i, B(i,j) the value of the
// recovered input field g_j component i, both at x = 0.  offset holds the
// recovered drift at the origin (near zero when the origin is an
// equilibrium).  Throws when the data behind the set could not determine the
// coordinates (dictionary degree < 1 is rejected by the basis already).
struct LinearModel {
  MatrixXd A;
  MatrixXd B;
  VectorXd offset;
};

LinearModel identify_linear(const GeneratorSet& gen);

}  // namespace densynth
