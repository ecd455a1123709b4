#pragma once

// Control-affine dynamics xdot = f(x) + g(x) u.  Systems carry callable
// evaluators (so non-polynomial dynamics like the pendulum fit) and, when
// available, exact polynomial forms used by tests and estimation oracles.

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "densynth/poly.hpp"

namespace densynth {

struct ControlAffineSystem {
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  std::string name;
  std::function<VectorXd(const VectorXd&)> drift;   // f(x)
  std::function<MatrixXd(const VectorXd&)> input;   // g(x), n x m

  // Exact polynomial forms when the dynamics are polynomial (empty otherwise).
  std::vector<Poly> drift_poly;                        // size n
  std::vector<std::vector<Poly>> input_poly;           // [j] = column j, size n

  bool is_polynomial() const { return !drift_poly.empty(); }

  VectorXd rhs(const VectorXd& x, const VectorXd& u) const {
    return drift(x) + input(x) * u;
  }

  static ControlAffineSystem from_polys(std::string name,
                                        std::vector<Poly> drift,
                                        std::vector<std::vector<Poly>> input_cols);
};

// Benchmark systems.
ControlAffineSystem make_example1();   // cubic planar system, input enters as x1*u
ControlAffineSystem make_vanderpol();  // reversed-time Van der Pol oscillator
ControlAffineSystem make_pendulum();   // damped pendulum (non-polynomial drift)
ControlAffineSystem make_lorentz();    // Lorentz system, input on the second state

// Lookup by preset name ("example1", "vdp", "pendulum", "lorentz").
ControlAffineSystem make_system(const std::string& name);

}  // namespace densynth
