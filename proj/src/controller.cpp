#include "densynth/controller.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "densynth/jsonio.hpp"

namespace densynth {

using nlohmann::json;

namespace {

// Minimum of p over the faces of the box, scanned on a per-face grid; used
// for the boundary scale of the denominator base on the excluded box.
double face_minimum(const Poly& p, const Box& box, int pts = 33) {
  const int n = box.dim();
  double best = std::numeric_limits<double>::infinity();
  VectorXd x(n);
  for (int axis = 0; axis < n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      // Odometer over the remaining axes.
      std::vector<int> idx(n, 0);
      while (true) {
        for (int i = 0; i < n; ++i) {
          if (i == axis) {
            x[i] = side ? box.hi[i] : box.lo[i];
          } else {
            x[i] = box.lo[i] +
                   (box.hi[i] - box.lo[i]) * idx[i] / double(pts - 1);
          }
        }
        best = std::min(best, p.eval(x));
        int carry = 0;
        while (carry < n && (carry == axis || ++idx[carry] >= pts)) {
          if (carry != axis) idx[carry] = 0;
          ++carry;
        }
        if (carry >= n) break;
      }
    }
  }
  return best;
}

double grid_max_abs(const Poly& p, const Box& box, int pts = 41) {
  const int n = box.dim();
  double best = 0.0;
  VectorXd x(n);
  std::vector<int> idx(n, 0);
  while (true) {
    for (int i = 0; i < n; ++i)
      x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * idx[i] / double(pts - 1);
    best = std::max(best, std::abs(p.eval(x)));
    int carry = 0;
    while (carry < n && ++idx[carry] >= pts) idx[carry++] = 0;
    if (carry >= n) break;
  }
  return best;
}

Poly dict_poly(const BasisDictionary& dict, const VectorXd& head) {
  VectorXd full = VectorXd::Zero(dict.size());
  full.head(head.size()) = head;
  return dict.to_poly(full).trimmed(0.0);
}

}  // namespace

VectorXd RationalController::rational(const VectorXd& x) const {
  const double denom = std::max(a.eval(x), a_clamp);
  VectorXd u(m);
  for (int j = 0; j < m; ++j) u[j] = c[j].eval(x) / denom;
  return u;
}

VectorXd RationalController::eval(const VectorXd& x) const {
  VectorXd kr = rational(x);
  if (!local) return kr;
  const double v = x.dot(local->P * x);
  if (v < 1e-100) return VectorXd(-(local->K * x));
  const double rho_l = std::max(std::pow(v, -3.0) - local->delta, 0.0);
  if (rho_l == 0.0) return kr;
  const double bv = std::max(b.eval(x), b_floor);
  const double rho_n = std::max(a.eval(x), a_clamp) / std::pow(bv, alpha);
  const VectorXd kl = -(local->K * x);
  return (rho_l * kl + rho_n * kr) / (rho_l + rho_n);
}

ControlPolicy RationalController::policy() const {
  RationalController c = *this;
  return [c = std::move(c)](double, const VectorXd& x) { return c.eval(x); };
}

json RationalController::to_json() const {
  json j;
  j["n"] = n;
  j["m"] = m;
  j["alpha"] = alpha;
  j["gamma"] = gamma;
  j["a"] = poly_to_json(a);
  j["c"] = json::array();
  for (const auto& cj : c) j["c"].push_back(poly_to_json(cj));
  j["b"] = poly_to_json(b);
  j["b_floor"] = b_floor;
  j["a_clamp"] = a_clamp;
  if (local) {
    j["local"] = {{"P", matrix_to_json(local->P)},
                  {"K", matrix_to_json(local->K)},
                  {"delta", local->delta}};
  }
  j["provenance"] = provenance;
  return j;
}

RationalController RationalController::from_json(const json& j) {
  RationalController ctrl;
  ctrl.n = j.at("n").get<int>();
  ctrl.m = j.at("m").get<int>();
  ctrl.alpha = j.at("alpha").get<int>();
  ctrl.gamma = j.at("gamma").get<double>();
  ctrl.a = poly_from_json(j.at("a"));
  for (const auto& cj : j.at("c")) ctrl.c.push_back(poly_from_json(cj));
  ctrl.b = poly_from_json(j.at("b"));
  ctrl.b_floor = j.at("b_floor").get<double>();
  ctrl.a_clamp = j.at("a_clamp").get<double>();
  if (j.contains("local")) {
    LocalBlend lb;
    lb.P = matrix_from_json(j.at("local").at("P"));
    lb.K = matrix_from_json(j.at("local").at("K"));
    lb.delta = j.at("local").at("delta").get<double>();
    ctrl.local = std::move(lb);
  }
  if (j.contains("provenance")) ctrl.provenance = j.at("provenance");
  return ctrl;
}

void RationalController::save(const std::string& path) const {
  write_json_file(path, to_json());
}

RationalController RationalController::load(const std::string& path) {
  return from_json(read_json_file(path));
}

RationalController extract_controller(const BasisDictionary& dict,
                                      const SynthesisProgram& prog,
                                      const SdpSolutionView& view,
                                      const OcpOptions& opt) {
  if (prog.metadata.contains("dictionary") &&
      !dict.same_descriptor(
          BasisDictionary::from_descriptor(prog.metadata.at("dictionary"))))
    throw std::invalid_argument(
        "extract_controller: dictionary does not match the program");
  RationalController ctrl;
  ctrl.n = dict.n_vars();
  ctrl.alpha = opt.alpha;
  ctrl.gamma = opt.gamma;
  if (!view.blocks.count("a"))
    throw std::invalid_argument("extract_controller: missing block a");
  ctrl.a = dict_poly(dict, view.blocks.at("a"));
  for (int j = 1; view.blocks.count("c" + std::to_string(j)); ++j)
    ctrl.c.push_back(dict_poly(dict, view.blocks.at("c" + std::to_string(j))));
  ctrl.m = static_cast<int>(ctrl.c.size());
  if (ctrl.m == 0)
    throw std::invalid_argument("extract_controller: no input numerators");
  ctrl.b = default_b(ctrl.n);
  ctrl.b_floor = face_minimum(ctrl.b, opt.excluded);
  if (!(ctrl.b_floor > 0))
    throw std::invalid_argument(
        "extract_controller: denominator base not positive on the excluded "
        "boundary");
  ctrl.a_clamp = 1e-8 * std::max(1.0, grid_max_abs(ctrl.a, opt.domain));
  ctrl.provenance = {{"norm", to_string(opt.norm)},
                     {"gamma", opt.gamma},
                     {"alpha", opt.alpha},
                     {"beta", opt.beta},
                     {"objective", view.objective}};
  return ctrl;
}

void attach_local(RationalController& ctrl, const GeneratorSet& lin_gens,
                  const MatrixXd& R) {
  const LinearModel lm = identify_linear(lin_gens);
  MatrixXd r = R.size() ? R : MatrixXd::Identity(lm.B.cols(), lm.B.cols());
  const LqrResult lqr =
      solve_lqr(lm.A, lm.B, MatrixXd::Identity(lm.A.rows(), lm.A.cols()), r);
  LocalBlend lb;
  lb.P = lqr.P;
  lb.K = lqr.K;
  // Hand the ellipse over at the excluded-boundary scale of b.
  lb.delta = std::pow(ctrl.b_floor, -3.0);
  ctrl.local = std::move(lb);
}

RolloutResult rollout(const ControlAffineSystem& sys, const ControlPolicy& u,
                      const VectorXd& x0, const OcpOptions& opt,
                      const RolloutOptions& ro) {
  SimOptions so;
  so.dt = ro.dt;
  so.steps = static_cast<int>(std::llround(ro.t_final / ro.dt));
  so.divergence_bound = ro.divergence_bound;
  RolloutResult res;
  res.x = simulate(sys, x0, u, so);
  const int T = static_cast<int>(res.x.cols());
  res.diverged = T < so.steps + 1;
  res.t = VectorXd::LinSpaced(T, 0.0, (T - 1) * ro.dt);
  res.u.resize(sys.m, T);
  const Poly q = opt.q.n_vars() == sys.n ? opt.q : default_b(sys.n);
  MatrixXd r_cost = opt.R.size() ? opt.R : MatrixXd::Identity(sys.m, sys.m);
  res.min_norm = std::numeric_limits<double>::infinity();
  double prev = 0.0;
  for (int i = 0; i < T; ++i) {
    const VectorXd xi = res.x.col(i);
    const VectorXd ui = u(res.t[i], xi);
    res.u.col(i) = ui;
    const double input_cost = opt.norm == CostNorm::kL1
                                  ? opt.beta * ui.cwiseAbs().sum()
                                  : opt.beta * ui.dot(r_cost * ui);
    const double g = std::exp(opt.gamma * res.t[i]) * (q.eval(xi) + input_cost);
    if (i > 0) res.cost += 0.5 * (prev + g) * ro.dt;
    prev = g;
    const double norm = xi.norm();
    res.min_norm = std::min(res.min_norm, norm);
    if (!res.first_hit && ro.hit_radius && norm <= *ro.hit_radius)
      res.first_hit = res.t[i];
  }
  res.final_norm = res.x.col(T - 1).norm();
  return res;
}

json RolloutResult::summary() const {
  json j;
  j["samples"] = t.size();
  j["t_final"] = t.size() ? t[t.size() - 1] : 0.0;
  j["cost"] = cost;
  j["final_norm"] = final_norm;
  j["min_norm"] = min_norm;
  j["diverged"] = diverged;
  if (first_hit) j["first_hit"] = *first_hit;
  return j;
}

CertifyReport certify_density(const Poly& density, const Box& domain,
                              int points_per_axis, double tol) {
  const int n = domain.dim();
  if (density.n_vars() != n)
    throw std::invalid_argument("certify_density: dimension mismatch");
  const int pts = points_per_axis > 0 ? points_per_axis : (n <= 2 ? 200 : 50);
  if (pts < 2) throw std::invalid_argument("certify_density: grid too small");
  CertifyReport rep;
  rep.tol = tol;
  rep.min_value = std::numeric_limits<double>::infinity();
  rep.argmin = VectorXd::Zero(n);
  VectorXd x(n);
  std::vector<int> idx(n, 0);
  long count = 0;
  while (true) {
    for (int i = 0; i < n; ++i)
      x[i] = domain.lo[i] +
             (domain.hi[i] - domain.lo[i]) * idx[i] / double(pts - 1);
    const double v = density.eval(x);
    if (v < rep.min_value) {
      rep.min_value = v;
      rep.argmin = x;
    }
    rep.max_abs = std::max(rep.max_abs, std::abs(v));
    ++count;
    int carry = 0;
    while (carry < n && ++idx[carry] >= pts) idx[carry++] = 0;
    if (carry >= n) break;
  }
  rep.n_points = count;
  rep.ok = rep.min_value >= -tol * std::max(1.0, rep.max_abs);
  return rep;
}

json CertifyReport::to_json() const {
  json j;
  j["min_value"] = min_value;
  j["max_abs"] = max_abs;
  j["n_points"] = n_points;
  j["tol"] = tol;
  j["ok"] = ok;
  j["argmin"] = vector_to_json(argmin);
  return j;
}

}  // namespace densynth
