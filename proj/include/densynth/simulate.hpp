#pragma once

// Fixed-step RK4 integration, derivative estimation and the data-collection
// protocol: one dataset under zero input and one per unit step input e_j,
// each made of many short trajectories from uniformly sampled initial states.

#include <cstdint>
#include <functional>
#include <vector>

#include "densynth/systems.hpp"
#include "densynth/trajectory.hpp"

namespace densynth {

using ControlPolicy = std::function<VectorXd(double t, const VectorXd& x)>;

ControlPolicy zero_policy(int m);
ControlPolicy step_policy(int m, int j, double magnitude = 1.0);

struct SimOptions {
  double dt = 0.01;
  int steps = 100;                  // samples returned = steps + 1 (incl. x0)
  double divergence_bound = 1e6;    // truncate when |x|_inf exceeds this
};

// Samples x(0), x(dt), ...; fewer columns when the divergence bound truncates.
MatrixXd simulate(const ControlAffineSystem& sys, const VectorXd& x0,
                  const ControlPolicy& u, const SimOptions& opt);

enum class DerivativeScheme { kAnalytic, kBackward, kCentral };

DerivativeScheme derivative_scheme_from_string(const std::string& s);

// Fills ds.xdot from ds.x segment-by-segment.  Backward differences use the
// previous sample (forward at each segment start); central differences use
// both neighbours (one-sided at segment ends).  Segments need >= 2 samples.
void finite_difference(TrajectoryDataset& ds, DerivativeScheme scheme);

struct ProtocolOptions {
  int n_traj = 200;
  int steps = 100;
  double dt = 0.01;
  double divergence_bound = 1e6;
  VectorXd lo, hi;                  // initial-condition box
  std::uint64_t seed = 0;
  DerivativeScheme scheme = DerivativeScheme::kBackward;
};

// m+1 datasets: input_label "zero", then "step1".."stepm" with u = e_j.
// With kAnalytic the recorded xdot is f(x) + g(x) u exactly at each sample.
std::vector<TrajectoryDataset> collect_protocol(const ControlAffineSystem& sys,
                                                const ProtocolOptions& opt);

}  // namespace densynth
