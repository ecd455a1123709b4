#pragma once

// End-to-end orchestration of the synthesis studies: excitation-protocol
// data collection, generator estimation on the synthesis dictionary and on a
// small near-origin dictionary for the local gain, program assembly and
// solve with a recorded acceptance decision, controller extraction, and a
// single-call pipeline.  Presets carry the benchmark parameter sets.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "densynth/controller.hpp"
#include "densynth/gedmd.hpp"
#include "densynth/ocp.hpp"
#include "densynth/simulate.hpp"
#include "densynth/soscompile.hpp"
#include "densynth/systems.hpp"

namespace densynth {

struct RunConfig {
  std::string system = "example1";
  BasisKind basis = BasisKind::kLegendre;
  int order = 4;  // synthesis dictionary degree
  OcpOptions ocp;
  ProtocolOptions protocol;  // initial-condition box defaults to the domain
  double ridge = 0.0;
  ConicOptions solver;

  // Near-origin estimation for the local linear-quadratic gain.
  double local_halfwidth = 0.5;
  int local_traj = 100;
  int local_steps = 50;

  // Solves that stall short of full tolerance still carry their best
  // iterate; it is accepted when primal/dual feasibility reach accept_rel
  // and the gap reaches accept_gap.
  double accept_rel = 1e-5;
  double accept_gap = 1e-3;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  // "example1", "vdp", "pendulum", "lorentz" with the benchmark parameters.
  static RunConfig preset(const std::string& system);
};

// Datasets for the synthesis dictionary: zero input first, then unit steps.
std::vector<TrajectoryDataset> collect_stage(const RunConfig& cfg);

// Generator estimation over the synthesis dictionary.  Samples outside the
// domain box are dropped first; scaled Legendre factors blow up outside it.
GeneratorSet estimate_stage(const RunConfig& cfg,
                            const std::vector<TrajectoryDataset>& sets);

// Fresh near-origin data on a degree-2 monomial dictionary, feeding the
// local linearization.
GeneratorSet estimate_local_stage(const RunConfig& cfg);

struct SynthesisOutcome {
  SynthesisProgram program;
  SdpProblem sdp;
  ConicSolution solution;
  SdpSolutionView view;
  RationalController controller;
  bool solver_optimal = false;
  bool accepted = false;
  nlohmann::json report;
};

// Assembles, solves and extracts.  local_gens, when given, attaches the
// blended local gain.  Throws when the solve is neither optimal nor within
// the fallback bounds.
SynthesisOutcome synthesize_stage(const RunConfig& cfg,
                                  const GeneratorSet& gens,
                                  const GeneratorSet* local_gens = nullptr);

struct PipelineResult {
  GeneratorSet generators;
  GeneratorSet local_generators;
  SynthesisOutcome synthesis;
  nlohmann::json report;
};

PipelineResult run_pipeline(const RunConfig& cfg);

// Stable content hash of the generator matrices (FNV-1a over the entries),
// recorded in controller provenance so artifacts can be traced to the
// estimate that produced them.
std::string generator_hash(const GeneratorSet& gens);

}  // namespace densynth
