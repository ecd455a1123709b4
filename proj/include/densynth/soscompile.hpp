#pragma once

// Compilation of a SynthesisProgram into an equality-form cone program.
// Every sum-of-squares constraint (scalar or matrix) contributes one
// positive-semidefinite Gram block whose svec is appended to the decision
// vector, and one equality row per matched monomial (per matrix entry) ties
// the affine coefficient expressions to the Gram expansion
//
//   M_ik(x) = sum_{r,s} D[r p + i, s p + k] z_r(x) z_s(x),
//
// where z is the monomial basis up to the block's factor degree.  Linear
// equalities of the program become plain rows.  The resulting problem feeds
// solve_conic directly.

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densynth/conic.hpp"
#include "densynth/ocp.hpp"

namespace densynth {

// The factor basis pairs each matrix corner i with the monomials up to its
// own degree h_i, so low-degree diagonal entries (a constant next to a
// degree-8 one, say) do not force structurally zero Gram diagonals that
// would empty the cone's interior.  h_i defaults to floor(deg(M_ii)/2) and
// is raised only when an off-diagonal entry needs h_i + h_k >= deg(M_ik);
// coefficients beyond the factor range are forced to zero through the
// matching rows, which is exact because sums of squares have even degree.
struct GramBlockInfo {
  std::string label;   // source constraint label
  int x_offset = 0;    // start of the svec within the stacked variable
  int entry_side = 1;  // matrix side p of the source constraint
  int side = 0;        // Gram side = sum of corner basis sizes
  std::vector<int> corner_degrees;  // factor degree per corner
  std::vector<int> corner_offsets;  // first Gram row of each corner
};

struct SdpProblem {
  ConicProblem conic;      // cone layout, A, b, and the scaled cost c
  double obj_scale = 1.0;  // multiply c^T x by this to recover the program cost
  int n_free = 0;          // stacked decision dimension (== conic.cone.n_free)
  std::vector<GramBlockInfo> grams;
  nlohmann::json metadata;
};

// Compiles the program.  Rows are scaled to unit max magnitude and the cost
// to unit infinity norm (recorded in obj_scale).  Throws std::invalid_argument
// when the program has no sum-of-squares constraints, or when a scalar
// constraint carries a fixed odd-degree leading coefficient that no decision
// or Gram term can cancel (such a polynomial is never a sum of squares).
SdpProblem assemble_sdp(const SynthesisProgram& prog);

struct SdpSolutionView {
  std::map<std::string, VectorXd> blocks;  // named decision blocks
  double objective = 0.0;                  // unscaled program cost
};

// Maps a solver point back onto the program's named decision blocks.
SdpSolutionView extract_solution(const SynthesisProgram& prog,
                                 const SdpProblem& sdp,
                                 const ConicSolution& sol);

// Dense symmetric Gram matrix of the named block at the solver point.
MatrixXd gram_matrix(const SdpProblem& sdp, const ConicSolution& sol,
                     const std::string& label);

// Plain-text serialization (sparse triplets, 17 significant digits).  The
// bytes are a pure function of the problem data; metadata is not stored.
void write_sdp(const SdpProblem& sdp, const std::string& path);
SdpProblem read_sdp(const std::string& path);

}  // namespace densynth
