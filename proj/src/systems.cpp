#include "densynth/systems.hpp"

#include <cmath>
#include <stdexcept>

namespace densynth {

ControlAffineSystem ControlAffineSystem::from_polys(
    std::string name, std::vector<Poly> drift,
    std::vector<std::vector<Poly>> input_cols) {
  ControlAffineSystem sys;
  sys.name = std::move(name);
  sys.n = static_cast<int>(drift.size());
  sys.m = static_cast<int>(input_cols.size());
  for (const auto& col : input_cols)
    if (static_cast<int>(col.size()) != sys.n)
      throw std::invalid_argument("from_polys: input column dimension mismatch");
  sys.drift_poly = std::move(drift);
  sys.input_poly = std::move(input_cols);
  const auto* fp = &sys.drift_poly;
  const auto* gp = &sys.input_poly;
  const int n = sys.n, m = sys.m;
  sys.drift = [fp, n](const VectorXd& x) {
    VectorXd out(n);
    for (int i = 0; i < n; ++i) out[i] = (*fp)[i].eval(x);
    return out;
  };
  sys.input = [gp, n, m](const VectorXd& x) {
    MatrixXd out(n, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < n; ++i) out(i, j) = (*gp)[j][i].eval(x);
    return out;
  };
  return sys;
}

ControlAffineSystem make_example1() {
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  std::vector<Poly> drift = {
      -1.0 * x1 + x2,
      -0.5 * (x1 + x2) + 0.5 * x1 * x1 * x2,
  };
  std::vector<std::vector<Poly>> input = {{Poly::constant(2, 0.0), x1}};
  return ControlAffineSystem::from_polys("example1", std::move(drift), std::move(input));
}

ControlAffineSystem make_vanderpol() {
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  std::vector<Poly> drift = {
      x2,
      (Poly::constant(2, 1.0) - x1 * x1) * x2 - x1,
  };
  std::vector<std::vector<Poly>> input = {{Poly::constant(2, 0.0), Poly::constant(2, 1.0)}};
  return ControlAffineSystem::from_polys("vdp", std::move(drift), std::move(input));
}

ControlAffineSystem make_pendulum() {
  ControlAffineSystem sys;
  sys.name = "pendulum";
  sys.n = 2;
  sys.m = 1;
  sys.drift = [](const VectorXd& x) {
    VectorXd out(2);
    out[0] = x[1];
    out[1] = -std::sin(x[0]) - 0.2 * x[1];
    return out;
  };
  sys.input = [](const VectorXd&) {
    MatrixXd g(2, 1);
    g << 0.0, 1.0;
    return g;
  };
  return sys;
}

ControlAffineSystem make_lorentz() {
  const double sigma = 10.0, rho = 28.0, eta = 8.0 / 3.0;
  Poly x1 = Poly::variable(3, 0), x2 = Poly::variable(3, 1), x3 = Poly::variable(3, 2);
  std::vector<Poly> drift = {
      sigma * (x2 - x1),
      rho * x1 - x1 * x3 - x2,
      x1 * x2 - eta * x3,
  };
  std::vector<std::vector<Poly>> input = {
      {Poly::constant(3, 0.0), Poly::constant(3, 1.0), Poly::constant(3, 0.0)}};
  return ControlAffineSystem::from_polys("lorentz", std::move(drift), std::move(input));
}

ControlAffineSystem make_system(const std::string& name) {
  if (name == "example1") return make_example1();
  if (name == "vdp") return make_vanderpol();
  if (name == "pendulum") return make_pendulum();
  if (name == "lorentz") return make_lorentz();
  throw std::invalid_argument("unknown system preset: " + name);
}

}  // namespace densynth
