#pragma once

// Feedback extraction from a solved density program and closed-loop tools.
// The synthesis returns the numerator coefficients of the occupation density
// rho = a / b^alpha and of the input numerators c_j = k_j a; the feedback law
// is the ratio k_j = c_j / a.  The density certificate says nothing inside
// the excluded neighbourhood of the target, so the rational law can be
// blended with a local linear-quadratic gain using density-weighted convex
// weights: the local density (x^T P x)^-3 - delta takes over where the
// occupation density (clamped at its excluded-boundary scale) is flat.

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densynth/gedmd.hpp"
#include "densynth/ocp.hpp"
#include "densynth/riccati.hpp"
#include "densynth/simulate.hpp"
#include "densynth/soscompile.hpp"

namespace densynth {

struct LocalBlend {
  MatrixXd P;          // local value matrix; x^T P x gauges closeness
  MatrixXd K;          // local gain, u = -K x
  double delta = 0.0;  // rho_local = max((x^T P x)^-3 - delta, 0)
};

struct RationalController {
  int n = 0, m = 0;
  int alpha = 4;
  double gamma = 0.0;
  Poly a;                // density numerator
  std::vector<Poly> c;   // input numerators, one per channel
  Poly b;                // denominator base, vanishes at the target
  double b_floor = 1.0;  // min of b on the excluded-box boundary
  double a_clamp = 0.0;  // lower clamp on a when dividing
  std::optional<LocalBlend> local;
  nlohmann::json provenance;

  // Global rational law k*(x) = c(x) / max(a(x), a_clamp).
  VectorXd rational(const VectorXd& x) const;
  // Blended law; identical to rational() when no local part is attached or
  // the local density vanishes (outside x^T P x < delta^{-1/3}).
  VectorXd eval(const VectorXd& x) const;
  ControlPolicy policy() const;

  nlohmann::json to_json() const;
  static RationalController from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static RationalController load(const std::string& path);
};

// Rebuilds the numerator polynomials of a solved program over its dictionary.
// The dictionary must be the one the program was built from (checked against
// the program metadata).  Throws when expected decision blocks are missing.
RationalController extract_controller(const BasisDictionary& dict,
                                      const SynthesisProgram& prog,
                                      const SdpSolutionView& view,
                                      const OcpOptions& opt);

// Attaches the local blend read off a generator set: LQR with Q = I and the
// given R on the linearization at the origin.  The blend threshold places
// the handover ellipse at the excluded-boundary scale of b.
void attach_local(RationalController& ctrl, const GeneratorSet& lin_gens,
                  const MatrixXd& R);

struct RolloutOptions {
  double dt = 0.01;
  double t_final = 10.0;
  double divergence_bound = 1e6;
  std::optional<double> hit_radius;  // record first time ||x||_2 <= radius
};

struct RolloutResult {
  VectorXd t;
  MatrixXd x;  // n x samples
  MatrixXd u;  // m x samples
  double cost = 0.0;  // integral of e^{gamma t} (q + input cost)
  double final_norm = 0.0;
  double min_norm = 0.0;
  std::optional<double> first_hit;
  bool diverged = false;

  nlohmann::json summary() const;
};

// Closed-loop rollout under the given policy.  The running cost uses the
// program's q (x^T x when unset), with beta ||u||_1 or beta u^T R u matching
// the program's input norm, discounted by e^{gamma t}.
RolloutResult rollout(const ControlAffineSystem& sys, const ControlPolicy& u,
                      const VectorXd& x0, const OcpOptions& opt,
                      const RolloutOptions& ro);

struct CertifyReport {
  double min_value = 0.0;
  double max_abs = 0.0;
  long n_points = 0;
  double tol = 1e-6;
  bool ok = false;
  VectorXd argmin;

  nlohmann::json to_json() const;
};

// Evaluates a polynomial on a tensor grid over the box and checks
// min >= -tol * max(1, max |value|).  points_per_axis = 0 picks 200 per axis
// for n <= 2 and 50 otherwise.
CertifyReport certify_density(const Poly& density, const Box& domain,
                              int points_per_axis = 0, double tol = 1e-6);

}  // namespace densynth
