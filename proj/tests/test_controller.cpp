#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "densynth/conic.hpp"
#include "densynth/controller.hpp"
#include "densynth/gedmd.hpp"
#include "densynth/ocp.hpp"
#include "densynth/soscompile.hpp"
#include "densynth/systems.hpp"

using namespace densynth;

namespace {

OcpOptions planar_options() {
  OcpOptions opt;
  opt.norm = CostNorm::kL2;
  opt.deg_a = 1;
  opt.deg_c = 2;
  opt.domain = {VectorXd::Constant(2, -5.0), VectorXd::Constant(2, 5.0)};
  opt.excluded = {VectorXd::Constant(2, -0.1), VectorXd::Constant(2, 0.1)};
  return opt;
}

}  // namespace

TEST_CASE("extraction reproduces planted numerators") {
  // Plant known polynomials as the solution blocks of a real program and
  // check the rebuilt controller evaluates them exactly; this exercises the
  // Legendre-to-monomial conversion, not the solver.
  auto sys = make_example1();
  VectorXd lo = VectorXd::Constant(2, -5.0), hi = VectorXd::Constant(2, 5.0);
  BasisDictionary dict(BasisKind::kLegendre, 2, 4, lo, hi);
  GeneratorSet gens = symbolic_generators(dict, sys);
  OcpOptions opt = planar_options();
  SynthesisProgram prog = build_program(gens, opt);

  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  Poly a_true = Poly::constant(2, 1.0) + 0.25 * x1 - 0.125 * x2;
  Poly c_true = -1.5 * x1 * x2 + 0.75 * x2 * x2 - 0.3 * x1 +
                Poly::constant(2, 0.2);

  SdpSolutionView view;
  view.blocks["a"] =
      dict.from_poly(a_true).head(prog.block("a").dim).eval();
  view.blocks["c1"] =
      dict.from_poly(c_true).head(prog.block("c1").dim).eval();

  RationalController ctrl = extract_controller(dict, prog, view, opt);
  CHECK(ctrl.n == 2);
  CHECK(ctrl.m == 1);
  CHECK(ctrl.b_floor == doctest::Approx(0.01).epsilon(1e-12));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(-4.0, 4.0);
  for (int t = 0; t < 50; ++t) {
    VectorXd x(2);
    x << unif(rng), unif(rng);
    CHECK(ctrl.a.eval(x) == doctest::Approx(a_true.eval(x)).epsilon(1e-10));
    CHECK(ctrl.c[0].eval(x) == doctest::Approx(c_true.eval(x)).epsilon(1e-10));
    const double expect = c_true.eval(x) / std::max(a_true.eval(x), ctrl.a_clamp);
    CHECK(ctrl.rational(x)[0] == doctest::Approx(expect).epsilon(1e-10));
  }

  // A dictionary with a different domain box is rejected.
  BasisDictionary other(BasisKind::kLegendre, 2, 4,
                        VectorXd::Constant(2, -4.0), VectorXd::Constant(2, 4.0));
  CHECK_THROWS_AS(extract_controller(other, prog, view, opt),
                  std::invalid_argument);
}

TEST_CASE("blend weights follow the density formula") {
  // Constant-gain rational part (c = kbar * a) against a planted local gain:
  // the blended input must match a hand-computed convex combination.
  RationalController ctrl;
  ctrl.n = 2;
  ctrl.m = 1;
  ctrl.alpha = 4;
  ctrl.a = Poly::constant(2, 1.0);
  ctrl.c = {Poly::constant(2, 2.0)};  // k* == 2 everywhere
  ctrl.b = default_b(2);
  ctrl.b_floor = 0.01;
  ctrl.a_clamp = 1e-8;
  LocalBlend lb;
  lb.P = MatrixXd::Identity(2, 2);
  MatrixXd K(1, 2);
  K << 3.0, -1.0;
  lb.K = K;
  lb.delta = std::pow(ctrl.b_floor, -3.0);
  ctrl.local = lb;

  // Outside the handover ellipse x^T x >= b_floor the law is purely rational.
  VectorXd far(2);
  far << 0.3, 0.4;
  CHECK(ctrl.eval(far)[0] == doctest::Approx(2.0).epsilon(1e-14));

  // Inside: weights (v^-3 - delta) vs a / max(b, b_floor)^alpha with v = x^T x.
  VectorXd mid(2);
  mid << 0.05, 0.02;
  const double v = mid.squaredNorm();
  const double rho_l = std::pow(v, -3.0) - lb.delta;
  const double rho_n = 1.0 / std::pow(ctrl.b_floor, 4.0);
  const double kl = -(K * mid)(0);
  const double expect = (rho_l * kl + rho_n * 2.0) / (rho_l + rho_n);
  CHECK(ctrl.eval(mid)[0] == doctest::Approx(expect).epsilon(1e-12));

  // At the target the local gain takes over completely.
  CHECK(ctrl.eval(VectorXd::Zero(2))[0] == doctest::Approx(0.0));
  VectorXd tiny(2);
  tiny << 1e-60, 0.0;
  CHECK(ctrl.eval(tiny)[0] == doctest::Approx(-(K * tiny)(0)).epsilon(1e-12));

  // The blend stays between the two laws pointwise.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-0.12, 0.12);
  for (int t = 0; t < 100; ++t) {
    VectorXd x(2);
    x << unif(rng), unif(rng);
    const double u = ctrl.eval(x)[0];
    const double a_law = -(K * x)(0), b_law = 2.0;
    CHECK(u >= std::min(a_law, b_law) - 1e-12);
    CHECK(u <= std::max(a_law, b_law) + 1e-12);
  }

  // Without the local part the law is rational everywhere.
  ctrl.local.reset();
  CHECK(ctrl.eval(VectorXd::Zero(2))[0] == doctest::Approx(2.0));
}

TEST_CASE("rollout matches the linear closed-loop solution") {
  // xdot = A x + B u with u = -K x has the closed form exp((A - B K) t) x0;
  // the controller c/a with a = 1, c = -K x realizes exactly that policy.
  MatrixXd A(2, 2);
  A << 0, 1, -2, -1;
  MatrixXd B(2, 1);
  B << 0, 1;
  MatrixXd K(1, 2);
  K << 1.0, 0.5;

  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  std::vector<Poly> drift = {A(0, 0) * x1 + A(0, 1) * x2,
                             A(1, 0) * x1 + A(1, 1) * x2};
  std::vector<std::vector<Poly>> input = {
      {Poly::constant(2, 0.0), Poly::constant(2, 1.0)}};
  auto sys = ControlAffineSystem::from_polys("lin", std::move(drift),
                                             std::move(input));

  RationalController ctrl;
  ctrl.n = 2;
  ctrl.m = 1;
  ctrl.a = Poly::constant(2, 1.0);
  ctrl.c = {-K(0, 0) * x1 - K(0, 1) * x2};
  ctrl.b = default_b(2);
  ctrl.b_floor = 0.01;
  ctrl.a_clamp = 1e-8;

  OcpOptions opt = planar_options();
  RolloutOptions ro;
  ro.dt = 0.01;
  ro.t_final = 2.0;
  VectorXd x0(2);
  x0 << 1.0, -0.5;
  RolloutResult res = rollout(sys, ctrl.policy(), x0, opt, ro);
  REQUIRE(res.x.cols() == 201);
  CHECK(!res.diverged);

  const MatrixXd Acl = A - B * K;
  const VectorXd xT = (Acl * ro.t_final).exp() * x0;
  CHECK((res.x.col(200) - xT).norm() < 1e-8);
  CHECK(res.final_norm == doctest::Approx(xT.norm()).epsilon(1e-7));

  // Discounted quadratic cost against dense numerical quadrature of the
  // closed form (independent of the rollout's own accumulator).
  OcpOptions disc = opt;
  disc.gamma = 0.4;
  RolloutResult res2 = rollout(sys, ctrl.policy(), x0, disc, ro);
  double expect_cost = 0.0;
  const int fine = 4000;
  for (int i = 0; i <= fine; ++i) {
    const double t = ro.t_final * i / fine;
    const VectorXd xt = (Acl * t).exp() * x0;
    const double ut = -(K * xt)(0);
    const double g = std::exp(disc.gamma * t) * (xt.squaredNorm() + ut * ut);
    expect_cost += (i == 0 || i == fine ? 0.5 : 1.0) * g * (ro.t_final / fine);
  }
  CHECK(res2.cost == doctest::Approx(expect_cost).epsilon(1e-4));
}

TEST_CASE("first hit time and divergence flag") {
  // Pure decay xdot = -x: ||x(t)|| = ||x0|| e^-t crosses r at t = ln(||x0||/r).
  Poly x1 = Poly::variable(1, 0);
  auto sys = ControlAffineSystem::from_polys(
      "decay", {-1.0 * x1}, {{Poly::constant(1, 0.0)}});
  RationalController ctrl;
  ctrl.n = 1;
  ctrl.m = 1;
  ctrl.a = Poly::constant(1, 1.0);
  ctrl.c = {Poly::constant(1, 0.0)};
  ctrl.b = default_b(1);
  ctrl.b_floor = 0.01;
  ctrl.a_clamp = 1e-8;

  OcpOptions opt;
  opt.domain = {VectorXd::Constant(1, -5.0), VectorXd::Constant(1, 5.0)};
  opt.excluded = {VectorXd::Constant(1, -0.1), VectorXd::Constant(1, 0.1)};
  RolloutOptions ro;
  ro.dt = 0.01;
  ro.t_final = 5.0;
  ro.hit_radius = 0.5;
  VectorXd x0(1);
  x0 << 2.0;
  RolloutResult res = rollout(sys, ctrl.policy(), x0, opt, ro);
  REQUIRE(res.first_hit.has_value());
  CHECK(*res.first_hit == doctest::Approx(std::log(4.0)).epsilon(0.02));
  CHECK(res.min_norm <= res.final_norm + 1e-15);

  // Explosive system trips the divergence bound and truncates.
  auto boom = ControlAffineSystem::from_polys(
      "boom", {x1 * x1 * x1}, {{Poly::constant(1, 0.0)}});
  ro.divergence_bound = 1e3;
  VectorXd far0(1);
  far0 << 3.0;
  RolloutResult bres = rollout(boom, ctrl.policy(), far0, opt, ro);
  CHECK(bres.diverged);
  CHECK(bres.x.cols() < 501);
}

TEST_CASE("density grid certification") {
  Box box{VectorXd::Constant(2, -1.0), VectorXd::Constant(2, 1.0)};
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);

  // Nonnegative polynomial passes; the 200-point grid straddles the zero.
  CertifyReport pos = certify_density(x1 * x1 + x2 * x2, box);
  CHECK(pos.ok);
  CHECK(pos.n_points == 200L * 200L);
  CHECK(pos.min_value >= 0.0);
  CHECK(pos.min_value < 1e-3);

  // Indefinite polynomial fails regardless of overall scale.
  CertifyReport neg =
      certify_density(1e8 * (x1 * x1 - Poly::constant(2, 0.5)), box);
  CHECK(!neg.ok);
  CHECK(neg.min_value < 0.0);
  CHECK(std::abs(neg.argmin[0]) < 0.05);

  // Tiny dips below zero stay within the relative tolerance.
  CertifyReport dip = certify_density(x1 * x1 - Poly::constant(2, 1e-9), box);
  CHECK(dip.ok);

  // Three-dimensional grids shrink to 50 points per axis.
  Box box3{VectorXd::Constant(3, -1.0), VectorXd::Constant(3, 1.0)};
  Poly y1 = Poly::variable(3, 0);
  CertifyReport three = certify_density(y1 * y1, box3);
  CHECK(three.n_points == 50L * 50L * 50L);
  CHECK(three.ok);
}

TEST_CASE("serialization round trip preserves the law") {
  RationalController ctrl;
  ctrl.n = 2;
  ctrl.m = 1;
  ctrl.alpha = 4;
  ctrl.gamma = 1.5;
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  ctrl.a = Poly::constant(2, 1.0) + 0.1 * x1;
  ctrl.c = {-0.7 * x1 * x2 + 0.2 * x2};
  ctrl.b = default_b(2);
  ctrl.b_floor = 0.01;
  ctrl.a_clamp = 1e-8;
  LocalBlend lb;
  lb.P = MatrixXd::Identity(2, 2) * 0.8;
  lb.K = MatrixXd::Ones(1, 2);
  lb.delta = 1e6;
  ctrl.local = lb;
  ctrl.provenance = {{"note", "round trip"}};

  const std::string path = "controller_roundtrip.json";
  ctrl.save(path);
  RationalController back = RationalController::load(path);
  std::remove(path.c_str());

  CHECK(back.n == 2);
  CHECK(back.gamma == doctest::Approx(1.5));
  CHECK(back.local.has_value());
  CHECK((back.local->P - lb.P).norm() < 1e-15);
  CHECK(back.provenance.at("note") == "round trip");
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int t = 0; t < 25; ++t) {
    VectorXd x(2);
    x << unif(rng), unif(rng);
    CHECK(back.eval(x)[0] == doctest::Approx(ctrl.eval(x)[0]).epsilon(1e-14));
  }
}

TEST_CASE("end to end planar synthesis yields a stabilizing law") {
  // Full chain on the cubic planar benchmark: exact generators, compile,
  // solve, extract; the optimal numerator ratio must stabilize the loop from
  // a corner of the operating box.
  auto sys = make_example1();
  VectorXd lo = VectorXd::Constant(2, -5.0), hi = VectorXd::Constant(2, 5.0);
  BasisDictionary dict(BasisKind::kLegendre, 2, 4, lo, hi);
  GeneratorSet gens = symbolic_generators(dict, sys);
  OcpOptions opt = planar_options();
  SynthesisProgram prog = build_program(gens, opt);
  SdpProblem sdp = assemble_sdp(prog);
  ConicOptions copt;
  copt.tol = 1e-6;
  ConicSolution sol = solve_conic(sdp.conic, copt);
  REQUIRE(sol.status == ConicStatus::kOptimal);
  SdpSolutionView view = extract_solution(prog, sdp, sol);
  RationalController ctrl = extract_controller(dict, prog, view, opt);
  attach_local(ctrl, gens, opt.R);

  // The planted benchmark admits k ~ kappa * x1 x2 with kappa < 0; the
  // extracted law must keep that structure.
  const double k12 = ctrl.c[0].coeff({1, 1});
  CHECK(k12 < 0.0);

  CertifyReport cert = certify_density(ctrl.a, opt.domain);
  CHECK(cert.ok);

  RolloutOptions ro;
  ro.dt = 0.01;
  ro.t_final = 10.0;
  VectorXd x0(2);
  x0 << 3.0, -3.0;
  RolloutResult res = rollout(sys, ctrl.policy(), x0, opt, ro);
  CHECK(!res.diverged);
  CHECK(res.final_norm < 0.05);
}
