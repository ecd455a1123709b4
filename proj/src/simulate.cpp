#include "densynth/simulate.hpp"

#include <random>
#include <stdexcept>

namespace densynth {

ControlPolicy zero_policy(int m) {
  return [m](double, const VectorXd&) { return VectorXd::Zero(m).eval(); };
}

ControlPolicy step_policy(int m, int j, double magnitude) {
  if (j < 0 || j >= m) throw std::invalid_argument("step_policy: channel out of range");
  return [m, j, magnitude](double, const VectorXd&) {
    VectorXd u = VectorXd::Zero(m);
    u[j] = magnitude;
    return u;
  };
}

MatrixXd simulate(const ControlAffineSystem& sys, const VectorXd& x0,
                  const ControlPolicy& u, const SimOptions& opt) {
  if (x0.size() != sys.n) throw std::invalid_argument("simulate: x0 dimension mismatch");
  if (!(opt.dt > 0)) throw std::invalid_argument("simulate: dt must be positive");
  MatrixXd out(sys.n, opt.steps + 1);
  out.col(0) = x0;
  VectorXd x = x0;
  int produced = 1;
  for (int k = 0; k < opt.steps; ++k) {
    const double t = k * opt.dt;
    const double h = opt.dt;
    const VectorXd uk = u(t, x);
    const VectorXd k1 = sys.rhs(x, uk);
    const VectorXd k2 = sys.rhs(x + 0.5 * h * k1, u(t + 0.5 * h, x + 0.5 * h * k1));
    const VectorXd k3 = sys.rhs(x + 0.5 * h * k2, u(t + 0.5 * h, x + 0.5 * h * k2));
    const VectorXd k4 = sys.rhs(x + h * k3, u(t + h, x + h * k3));
    x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!x.allFinite() || x.lpNorm<Eigen::Infinity>() > opt.divergence_bound) break;
    out.col(produced++) = x;
  }
  return out.leftCols(produced);
}

DerivativeScheme derivative_scheme_from_string(const std::string& s) {
  if (s == "analytic") return DerivativeScheme::kAnalytic;
  if (s == "backward") return DerivativeScheme::kBackward;
  if (s == "central") return DerivativeScheme::kCentral;
  throw std::invalid_argument("unknown derivative scheme: " + s);
}

void finite_difference(TrajectoryDataset& ds, DerivativeScheme scheme) {
  if (scheme == DerivativeScheme::kAnalytic)
    throw std::invalid_argument("finite_difference: analytic scheme has no difference rule");
  if (!(ds.dt > 0)) throw std::invalid_argument("finite_difference: dt must be positive");
  ds.xdot.resize(ds.n, ds.samples());
  for (int s = 0; s < ds.segments(); ++s) {
    auto [first, last] = ds.segment_range(s);
    if (last - first < 2)
      throw std::invalid_argument("finite_difference: segment with fewer than 2 samples");
    for (int k = first; k < last; ++k) {
      if (scheme == DerivativeScheme::kBackward) {
        if (k == first)
          ds.xdot.col(k) = (ds.x.col(k + 1) - ds.x.col(k)) / ds.dt;
        else
          ds.xdot.col(k) = (ds.x.col(k) - ds.x.col(k - 1)) / ds.dt;
      } else {  // central
        if (k == first)
          ds.xdot.col(k) = (ds.x.col(k + 1) - ds.x.col(k)) / ds.dt;
        else if (k == last - 1)
          ds.xdot.col(k) = (ds.x.col(k) - ds.x.col(k - 1)) / ds.dt;
        else
          ds.xdot.col(k) = (ds.x.col(k + 1) - ds.x.col(k - 1)) / (2.0 * ds.dt);
      }
    }
  }
}

std::vector<TrajectoryDataset> collect_protocol(const ControlAffineSystem& sys,
                                                const ProtocolOptions& opt) {
  if (opt.lo.size() != sys.n || opt.hi.size() != sys.n)
    throw std::invalid_argument("collect_protocol: initial-condition box dimension mismatch");
  // One shared draw of initial conditions: every input dataset restarts the
  // same experiments, so the zero- and step-input samples cover (nearly) the
  // same region and the generator difference L_j - L_0 cancels the drift
  // contribution instead of mixing two unrelated sample distributions.
  std::mt19937_64 gen(opt.seed);
  std::vector<std::uniform_real_distribution<double>> dist;
  for (int i = 0; i < sys.n; ++i) dist.emplace_back(opt.lo[i], opt.hi[i]);
  MatrixXd starts(sys.n, opt.n_traj);
  for (int tr = 0; tr < opt.n_traj; ++tr)
    for (int i = 0; i < sys.n; ++i) starts(i, tr) = dist[i](gen);

  std::vector<TrajectoryDataset> out;
  for (int which = 0; which <= sys.m; ++which) {
    TrajectoryDataset ds;
    ds.n = sys.n;
    ds.m = sys.m;
    ds.dt = opt.dt;
    ds.seed = opt.seed;
    ds.input_label = which == 0 ? "zero" : "step" + std::to_string(which);
    ControlPolicy policy = which == 0 ? zero_policy(sys.m) : step_policy(sys.m, which - 1);

    std::vector<MatrixXd> segments;
    int total = 0;
    for (int tr = 0; tr < opt.n_traj; ++tr) {
      SimOptions sim{opt.dt, opt.steps, opt.divergence_bound};
      MatrixXd xs = simulate(sys, starts.col(tr), policy, sim);
      if (xs.cols() < 2) continue;  // too short to difference
      total += static_cast<int>(xs.cols());
      segments.push_back(std::move(xs));
    }
    ds.x.resize(sys.n, total);
    int at = 0;
    for (const auto& seg : segments) {
      ds.segment_starts.push_back(at);
      ds.x.middleCols(at, seg.cols()) = seg;
      at += static_cast<int>(seg.cols());
    }

    if (opt.scheme == DerivativeScheme::kAnalytic) {
      ds.xdot.resize(sys.n, total);
      for (int k = 0; k < total; ++k) {
        const VectorXd xk = ds.x.col(k);
        ds.xdot.col(k) = sys.rhs(xk, policy(0.0, xk));
      }
    } else {
      finite_difference(ds, opt.scheme);
    }
    out.push_back(std::move(ds));
  }
  return out;
}

}  // namespace densynth
