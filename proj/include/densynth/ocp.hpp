#pragma once

// Assembly of the convex density-space control program.  The unknowns are the
// coefficient vectors of a density numerator a(x) and of input-weighted
// numerators c_j(x) = k_j(x) a(x); the occupation density is a / b^alpha with
// b(x) = x^T x vanishing at the target.  The transport inequality
//
//   (1+alpha) b div(f a + sum_j g_j c_j) - alpha div(f a b + sum_j g_j c_j b)
//     - gamma a b >= 0   on X \ N
//
// is imposed through sum-of-squares membership, with the divergences taken in
// projected (generator-matrix) form so estimated dynamics plug in directly.
// The cost integral and a mass normalization use moment vectors of the
// dictionary against the singular weight 1 / b^alpha.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densynth/affine_poly.hpp"
#include "densynth/gedmd.hpp"
#include "densynth/quadrature.hpp"

namespace densynth {

enum class CostNorm { kL1, kL2 };

std::string to_string(CostNorm norm);
CostNorm cost_norm_from_string(const std::string& s);

struct OcpOptions {
  CostNorm norm = CostNorm::kL2;
  int alpha = 4;      // density denominator power
  double beta = 1.0;  // input cost weight
  double gamma = 0.0; // discount rate
  int deg_a = 1;      // degree of the density numerator
  int deg_c = 2;      // degree of the input numerators
  int deg_s = 2;      // degree of the L1 slack polynomials
  Poly q;             // state cost (defaults to x^T x when left empty)
  MatrixXd R;         // input cost weights (defaults to identity)
  Box domain;         // X
  Box excluded;       // N, strictly inside X and containing the target
  // L2 only: adds the pointwise input bound u^T u <= input_bound via a
  // matrix constraint on (a, c).
  std::optional<double> input_bound;
  // Declared total degree of the governing vector fields.  When positive, the
  // recovered drift and input fields are trimmed to this degree and the
  // transport operators are rebuilt from the trimmed fields, so the program
  // is the exact program of a nearby polynomial system.  Estimated generator
  // matrices otherwise leak regression residue into dictionary directions the
  // true operator cannot reach; those coefficients land in the top band of
  // the transport polynomial, where no sum of squares can match sign-noise,
  // and the assembled program loses its interior.  0 uses the matrices as
  // given.
  int deg_field = 0;
};

struct DecisionBlock {
  std::string name;
  int dim = 0;
};

// p x p symmetric polynomial matrix required positive semidefinite on R^n
// (p == 1 is a plain sum-of-squares constraint).
struct MatrixSosConstraint {
  std::string label;
  std::vector<std::vector<AffinePoly>> entries;  // p x p, symmetric
  // Uniform factor-basis degree override for the Gram expansion; -1 lets the
  // compiler pick the minimal per-corner degrees covering the entries.
  int gram_degree = -1;
  int side() const { return static_cast<int>(entries.size()); }
};

// sum_blocks terms[name] . d_name == rhs
struct LinearEquality {
  std::string label;
  std::map<std::string, Eigen::RowVectorXd> terms;
  double rhs = 0.0;
};

struct SynthesisProgram {
  std::vector<DecisionBlock> blocks;
  std::map<std::string, VectorXd> objective;  // linear cost per block
  std::vector<MatrixSosConstraint> sos;
  std::vector<LinearEquality> equalities;
  nlohmann::json metadata;

  int total_dim() const;
  int block_offset(const std::string& name) const;  // -1 when absent
  const DecisionBlock& block(const std::string& name) const;
  // Splits a stacked decision vector into named blocks.
  std::map<std::string, VectorXd> split(const VectorXd& x) const;
};

// Builds the program over the dictionary carried by the generator set.
// Throws when a product degree (a*b or c_j*b) exceeds the dictionary degree,
// or when domain boxes and dimensions are inconsistent.
SynthesisProgram build_program(const GeneratorSet& gens, const OcpOptions& opt);

// Default localizing polynomial b(x) = x^T x.
Poly default_b(int n_vars);

}  // namespace densynth
