#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "densynth/simulate.hpp"
#include "densynth/systems.hpp"
#include "oracles.hpp"

using namespace densynth;

namespace {

// 1-d linear decay xdot = -x + u, closed form e^{-t} x0 under zero input.
ControlAffineSystem make_decay() {
  Poly x = Poly::variable(1, 0);
  return ControlAffineSystem::from_polys("decay", {-1.0 * x},
                                         {{Poly::constant(1, 1.0)}});
}

}  // namespace

TEST_CASE("rk4 tracks the exponential closed form") {
  auto sys = make_decay();
  VectorXd x0(1);
  x0 << 2.0;
  SimOptions opt;
  opt.dt = 0.01;
  opt.steps = 100;
  MatrixXd xs = simulate(sys, x0, zero_policy(1), opt);
  REQUIRE(xs.cols() == 101);
  for (int k = 0; k <= 100; ++k)
    CHECK(xs(0, k) == doctest::Approx(2.0 * std::exp(-0.01 * k)).epsilon(1e-10));
}

TEST_CASE("rk4 has fourth-order step error") {
  auto sys = make_decay();
  VectorXd x0(1);
  x0 << 1.0;
  auto run = [&](double dt, int steps) {
    SimOptions opt;
    opt.dt = dt;
    opt.steps = steps;
    return simulate(sys, x0, zero_policy(1), opt)(0, steps);
  };
  const double exact = std::exp(-1.0);
  const double e1 = std::abs(run(0.1, 10) - exact);
  const double e2 = std::abs(run(0.05, 20) - exact);
  const double ratio = e1 / e2;
  CHECK(ratio > 12.0);
  CHECK(ratio < 20.0);
}

TEST_CASE("divergence bound truncates blowing-up trajectories") {
  // xdot = x^2 from x0 = 3 escapes in finite time ~1/3 s.
  Poly x = Poly::variable(1, 0);
  auto sys = ControlAffineSystem::from_polys("blowup", {x * x},
                                             {{Poly::constant(1, 0.0)}});
  VectorXd x0(1);
  x0 << 3.0;
  SimOptions opt;
  opt.dt = 0.01;
  opt.steps = 100;
  opt.divergence_bound = 1e6;
  MatrixXd xs = simulate(sys, x0, zero_policy(1), opt);
  CHECK(xs.cols() < 101);
  CHECK(xs.cols() > 5);
  CHECK(xs.array().abs().maxCoeff() <= 1e6);
}

TEST_CASE("backward difference of t^2 reproduces the taylor oracle") {
  // x(t) = t^2 has backward difference (x(t) - x(t-h))/h = 2t - h exactly.
  TrajectoryDataset ds;
  ds.n = 1;
  ds.m = 0;
  ds.dt = 0.01;
  ds.segment_starts = {0};
  const int t_count = 101;
  ds.x.resize(1, t_count);
  for (int k = 0; k < t_count; ++k) ds.x(0, k) = std::pow(0.01 * k, 2);
  finite_difference(ds, DerivativeScheme::kBackward);
  // at t = 1.0 (last sample): 2*1.0 - 0.01 = 1.99
  CHECK(ds.xdot(0, 100) == doctest::Approx(1.99).epsilon(1e-12));
  // at the segment start the forward difference gives (h^2 - 0)/h = h.
  CHECK(ds.xdot(0, 0) == doctest::Approx(0.01).epsilon(1e-12));

  finite_difference(ds, DerivativeScheme::kCentral);
  // central difference of t^2 is exact in the interior.
  CHECK(ds.xdot(0, 50) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("backward difference error is first order in dt") {
  auto sys = make_decay();
  auto error_at = [&](double dt) {
    ProtocolOptions opt;
    opt.n_traj = 20;
    opt.steps = 50;
    opt.dt = dt;
    opt.lo = VectorXd::Constant(1, -2);
    opt.hi = VectorXd::Constant(1, 2);
    opt.seed = 42;
    opt.scheme = DerivativeScheme::kBackward;
    auto fd = collect_protocol(sys, opt)[0];
    opt.scheme = DerivativeScheme::kAnalytic;
    auto exact = collect_protocol(sys, opt)[0];
    return (fd.xdot - exact.xdot).cwiseAbs().mean();
  };
  const double ratio = error_at(0.01) / error_at(0.005);
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}

TEST_CASE("collect protocol emits zero and step datasets of the requested size") {
  auto sys = make_decay();
  ProtocolOptions opt;
  opt.n_traj = 10;
  opt.steps = 20;
  opt.dt = 0.01;
  opt.lo = VectorXd::Constant(1, -2);
  opt.hi = VectorXd::Constant(1, 2);
  opt.seed = 7;
  opt.scheme = DerivativeScheme::kAnalytic;
  auto sets = collect_protocol(sys, opt);
  REQUIRE(sets.size() == 2);  // zero + one input channel
  CHECK(sets[0].input_label == "zero");
  CHECK(sets[1].input_label == "step1");
  for (const auto& ds : sets) {
    CHECK(ds.samples() == 10 * 21);
    CHECK(ds.segments() == 10);
  }
  // analytic derivatives satisfy xdot = f(x) + g(x) u exactly
  for (int k = 0; k < sets[1].samples(); k += 17) {
    const double x = sets[1].x(0, k);
    CHECK(sets[1].xdot(0, k) == doctest::Approx(-x + 1.0).epsilon(1e-12));
  }
}

TEST_CASE("collect protocol is deterministic in the seed") {
  auto sys = make_example1();
  ProtocolOptions opt;
  opt.n_traj = 5;
  opt.steps = 10;
  opt.dt = 0.01;
  opt.lo = VectorXd::Constant(2, -1);
  opt.hi = VectorXd::Constant(2, 1);
  opt.seed = 123;
  auto a = collect_protocol(sys, opt);
  auto b = collect_protocol(sys, opt);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].xdot == b[i].xdot);
  }
  opt.seed = 124;
  auto c = collect_protocol(sys, opt);
  CHECK(a[0].x != c[0].x);
}

TEST_CASE("csv round trip is exact") {
  auto sys = make_example1();
  ProtocolOptions opt;
  opt.n_traj = 3;
  opt.steps = 5;
  opt.dt = 0.01;
  opt.lo = VectorXd::Constant(2, -1);
  opt.hi = VectorXd::Constant(2, 1);
  opt.seed = 9;
  auto ds = collect_protocol(sys, opt)[0];
  const std::string path = "/tmp/densynth_test_ds.csv";
  ds.save(path);
  auto back = TrajectoryDataset::load(path);
  CHECK(back.n == ds.n);
  CHECK(back.m == ds.m);
  CHECK(back.dt == ds.dt);
  CHECK(back.input_label == ds.input_label);
  CHECK(back.seed == ds.seed);
  CHECK(back.segment_starts == ds.segment_starts);
  CHECK(back.x == ds.x);        // bit-exact via %.17g
  CHECK(back.xdot == ds.xdot);
  std::filesystem::remove(path);
  std::filesystem::remove(path + ".json");
}

TEST_CASE("restrict_to_box keeps exactly the inside samples") {
  auto sys = make_example1();
  ProtocolOptions opt;
  opt.n_traj = 20;
  opt.steps = 30;
  opt.dt = 0.01;
  opt.lo = VectorXd::Constant(2, -3);
  opt.hi = VectorXd::Constant(2, 3);
  opt.seed = 5;
  auto ds = collect_protocol(sys, opt)[0];
  VectorXd lo = VectorXd::Constant(2, -1), hi = VectorXd::Constant(2, 1);
  auto sub = restrict_to_box(ds, lo, hi);
  int manual = 0;
  for (int k = 0; k < ds.samples(); ++k)
    if (ds.x(0, k) >= -1 && ds.x(0, k) <= 1 && ds.x(1, k) >= -1 && ds.x(1, k) <= 1)
      ++manual;
  CHECK(sub.samples() == manual);
  for (int k = 0; k < sub.samples(); ++k) {
    CHECK(sub.x.col(k).lpNorm<Eigen::Infinity>() <= 1.0);
  }
}

TEST_CASE("simulate rejects bad arguments") {
  auto sys = make_decay();
  VectorXd bad(2);
  bad << 1, 2;
  SimOptions opt;
  CHECK_THROWS_AS(simulate(sys, bad, zero_policy(1), opt), std::invalid_argument);
  CHECK_THROWS_AS(step_policy(1, 2), std::invalid_argument);
}

TEST_CASE("benchmark systems have consistent shapes") {
  for (const auto& name : {"example1", "vdp", "pendulum", "lorentz"}) {
    auto sys = make_system(name);
    VectorXd x = VectorXd::Constant(sys.n, 0.3);
    CHECK(sys.drift(x).size() == sys.n);
    CHECK(sys.input(x).rows() == sys.n);
    CHECK(sys.input(x).cols() == sys.m);
    if (sys.is_polynomial()) {
      // Callable form and polynomial form agree.
      for (int i = 0; i < sys.n; ++i)
        CHECK(sys.drift(x)[i] == doctest::Approx(sys.drift_poly[i].eval(x)));
    }
  }
  CHECK(make_pendulum().drift(VectorXd::Zero(2))[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(make_system("nope"), std::invalid_argument);
}
