#include "densynth/conic.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace densynth {

using nlohmann::json;

int svec_length(int d) { return d * (d + 1) / 2; }

int svec_index(int d, int i, int j) {
  if (i < j) std::swap(i, j);
  return j * d - j * (j - 1) / 2 + (i - j);
}

VectorXd svec(const MatrixXd& m) {
  const int d = static_cast<int>(m.rows());
  VectorXd v(svec_length(d));
  const double rt2 = std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < d; ++j) {
    v[idx++] = m(j, j);
    for (int i = j + 1; i < d; ++i)
      v[idx++] = rt2 * 0.5 * (m(i, j) + m(j, i));
  }
  return v;
}

MatrixXd smat(const Eigen::Ref<const VectorXd>& v, int d) {
  MatrixXd m(d, d);
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  int idx = 0;
  for (int j = 0; j < d; ++j) {
    m(j, j) = v[idx++];
    for (int i = j + 1; i < d; ++i) {
      const double val = inv_rt2 * v[idx++];
      m(i, j) = m(j, i) = val;
    }
  }
  return m;
}

int ConeSpec::dim() const {
  int d = n_free + n_nonneg;
  for (int s : psd_dims) d += svec_length(s);
  return d;
}

int ConeSpec::cone_dim() const { return dim() - n_free; }

int ConeSpec::barrier_degree() const {
  int nu = n_nonneg;
  for (int s : psd_dims) nu += s;
  return nu;
}

std::string to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::kOptimal: return "optimal";
    case ConicStatus::kPrimalInfeasible: return "primal_infeasible";
    case ConicStatus::kDualInfeasible: return "dual_infeasible";
    case ConicStatus::kMaxIterations: return "max_iterations";
    case ConicStatus::kNumericalTrouble: return "numerical_trouble";
  }
  return "unknown";
}

namespace {

struct Layout {
  int n_free, n_nonneg, n_cone, dim;
  std::vector<int> psd_off;  // offsets inside the cone part
  std::vector<int> psd_dim;
};

Layout make_layout(const ConeSpec& cone) {
  Layout lay;
  lay.n_free = cone.n_free;
  lay.n_nonneg = cone.n_nonneg;
  lay.dim = cone.dim();
  lay.n_cone = cone.cone_dim();
  int off = cone.n_nonneg;
  for (int d : cone.psd_dims) {
    lay.psd_off.push_back(off);
    lay.psd_dim.push_back(d);
    off += svec_length(d);
  }
  return lay;
}

// Nesterov-Todd scaling data for one iteration.
struct Scaling {
  VectorXd w2;               // orthant: x_i / z_i
  std::vector<MatrixXd> W;   // psd: R R^T
  std::vector<MatrixXd> R, Rinv;
  std::vector<VectorXd> lam;
  bool ok = true;
};

Scaling make_scaling(const Layout& lay, const VectorXd& xc, const VectorXd& zc) {
  Scaling s;
  s.w2 = xc.head(lay.n_nonneg).cwiseQuotient(zc.head(lay.n_nonneg));
  for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
    const int d = lay.psd_dim[b];
    MatrixXd X = smat(xc.segment(lay.psd_off[b], svec_length(d)), d);
    MatrixXd Z = smat(zc.segment(lay.psd_off[b], svec_length(d)), d);
    Eigen::LLT<MatrixXd> lx(X), lz(Z);
    if (lx.info() != Eigen::Success || lz.info() != Eigen::Success) {
      s.ok = false;
      return s;
    }
    MatrixXd Lx = lx.matrixL();
    MatrixXd Lz = lz.matrixL();
    Eigen::JacobiSVD<MatrixXd> svd(Lz.transpose() * Lx,
                                   Eigen::ComputeFullU | Eigen::ComputeFullV);
    VectorXd sig = svd.singularValues();
    if (sig.minCoeff() <= 0) {
      s.ok = false;
      return s;
    }
    VectorXd sqrt_sig = sig.cwiseSqrt();
    MatrixXd R = Lx * svd.matrixV() * sqrt_sig.cwiseInverse().asDiagonal();
    MatrixXd Rinv = sqrt_sig.asDiagonal() * svd.matrixV().transpose() *
                    Lx.triangularView<Eigen::Lower>().solve(
                        MatrixXd::Identity(d, d));
    s.R.push_back(R);
    s.Rinv.push_back(Rinv);
    s.W.push_back(R * R.transpose());
    s.lam.push_back(sig);
  }
  return s;
}

// v |-> W v W in svec coordinates (the NT quadratic representation).
VectorXd apply_scaling(const Layout& lay, const Scaling& s, const VectorXd& v) {
  VectorXd out(lay.n_cone);
  out.head(lay.n_nonneg) = s.w2.cwiseProduct(v.head(lay.n_nonneg));
  for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
    const int d = lay.psd_dim[b];
    MatrixXd M = smat(v.segment(lay.psd_off[b], svec_length(d)), d);
    out.segment(lay.psd_off[b], svec_length(d)) = svec(s.W[b] * M * s.W[b]);
  }
  return out;
}

// Largest t with x + t dx staying in the cone (+inf -> returns big).
double step_limit(const Layout& lay, const VectorXd& xc, const VectorXd& dx) {
  double limit = std::numeric_limits<double>::infinity();
  for (int i = 0; i < lay.n_nonneg; ++i)
    if (dx[i] < 0) limit = std::min(limit, -xc[i] / dx[i]);
  for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
    const int d = lay.psd_dim[b];
    MatrixXd X = smat(xc.segment(lay.psd_off[b], svec_length(d)), d);
    MatrixXd D = smat(dx.segment(lay.psd_off[b], svec_length(d)), d);
    Eigen::LLT<MatrixXd> lx(X);
    if (lx.info() != Eigen::Success) return 0.0;
    MatrixXd L = lx.matrixL();
    MatrixXd S = L.triangularView<Eigen::Lower>().solve(D);
    S = L.triangularView<Eigen::Lower>()
            .solve(S.transpose())
            .transpose();  // L^-1 D L^-T
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (S + S.transpose()),
                                                Eigen::EigenvaluesOnly);
    const double mn = eig.eigenvalues().minCoeff();
    if (mn < 0) limit = std::min(limit, -1.0 / mn);
  }
  return limit;
}

// Extended-precision copies used when refining Newton directions: the
// refinement residual is a difference of nearly equal quantities, so
// computing it in double caps the attainable direction accuracy well above
// what the factorization could deliver.
using ldbl = long double;
using MatrixXl = Eigen::Matrix<ldbl, Eigen::Dynamic, Eigen::Dynamic>;
using VectorXl = Eigen::Matrix<ldbl, Eigen::Dynamic, 1>;

VectorXl svec_l(const MatrixXl& m) {
  const int d = static_cast<int>(m.rows());
  VectorXl v(svec_length(d));
  const ldbl rt2h = std::sqrt((ldbl)2.0) / 2;
  int idx = 0;
  for (int j = 0; j < d; ++j) {
    v[idx++] = m(j, j);
    for (int i = j + 1; i < d; ++i) v[idx++] = rt2h * (m(i, j) + m(j, i));
  }
  return v;
}

MatrixXl smat_l(const Eigen::Ref<const VectorXl>& v, int d) {
  MatrixXl m(d, d);
  const ldbl inv_rt2 = 1 / std::sqrt((ldbl)2.0);
  int idx = 0;
  for (int j = 0; j < d; ++j) {
    m(j, j) = v[idx++];
    for (int i = j + 1; i < d; ++i) {
      const ldbl val = inv_rt2 * v[idx++];
      m(i, j) = m(j, i) = val;
    }
  }
  return m;
}

VectorXl apply_scaling_l(const Layout& lay, const VectorXl& w2,
                         const std::vector<MatrixXl>& W, const VectorXl& v) {
  VectorXl out(lay.n_cone);
  out.head(lay.n_nonneg) = w2.cwiseProduct(v.head(lay.n_nonneg));
  for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
    const int d = lay.psd_dim[b];
    MatrixXl M = smat_l(v.segment(lay.psd_off[b], svec_length(d)), d);
    out.segment(lay.psd_off[b], svec_length(d)) = svec_l(W[b] * M * W[b]);
  }
  return out;
}

// Distance of the cone part from the cone (0 when inside, tolerance-free).
double cone_violation(const Layout& lay, const VectorXd& vc) {
  double viol = 0.0;
  for (int i = 0; i < lay.n_nonneg; ++i) viol = std::max(viol, -vc[i]);
  for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
    const int d = lay.psd_dim[b];
    MatrixXd M = smat(vc.segment(lay.psd_off[b], svec_length(d)), d);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
    viol = std::max(viol, -eig.eigenvalues().minCoeff());
  }
  return viol;
}

}  // namespace

ConicSolution solve_conic(const ConicProblem& prob, const ConicOptions& opt) {
  const Layout lay = make_layout(prob.cone);
  const int m_eq = static_cast<int>(prob.A.rows());
  if (prob.A.cols() != lay.dim || prob.c.size() != lay.dim ||
      prob.b.size() != m_eq)
    throw std::invalid_argument("solve_conic: shape mismatch");
  const int nf = lay.n_free, nc = lay.n_cone;
  const double nu = std::max(1, prob.cone.barrier_degree());

  // Ruiz equilibration: alternately damp the largest row and column entries.
  // Free and nonnegative columns scale independently; the svec columns of a
  // matrix block scale as d_i d_j so the substitution is a congruence
  // X -> D X D and semidefiniteness is untouched.
  VectorXd row_s = VectorXd::Ones(m_eq);
  VectorXd col_s = VectorXd::Ones(lay.dim);
  for (int pass = 0; pass < opt.equil_passes && m_eq > 0; ++pass) {
    const MatrixXd M =
        (row_s.asDiagonal() * prob.A * col_s.asDiagonal()).cwiseAbs();
    const VectorXd rmax = M.rowwise().maxCoeff();
    for (int i = 0; i < m_eq; ++i)
      if (rmax[i] > 0) row_s[i] /= std::sqrt(rmax[i]);
    const VectorXd cmax = M.colwise().maxCoeff();
    for (int j = 0; j < nf + lay.n_nonneg; ++j)
      if (cmax[j] > 0) col_s[j] /= std::sqrt(cmax[j]);
    for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
      const int d = lay.psd_dim[b];
      const int off = nf + lay.psd_off[b];
      VectorXd t = VectorXd::Ones(d);
      for (int i = 0; i < d; ++i) {
        double worst = 0.0;
        for (int j = 0; j < d; ++j)
          worst = std::max(worst, cmax[off + svec_index(d, i, j)]);
        if (worst > 0) t[i] = std::pow(worst, -0.25);
      }
      for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j)
          col_s[off + svec_index(d, i, j)] *= t[i] * t[j];
    }
  }
  const MatrixXd As = row_s.asDiagonal() * prob.A * col_s.asDiagonal();
  VectorXd bs = row_s.asDiagonal() * prob.b;
  VectorXd cs = col_s.asDiagonal() * prob.c;
  double sb = bs.lpNorm<Eigen::Infinity>();
  if (!(sb > 0)) sb = 1.0;
  double scn = cs.lpNorm<Eigen::Infinity>();
  if (!(scn > 0)) scn = 1.0;
  bs /= sb;
  cs /= scn;
  const double b_norm = prob.b.norm();
  const double c_norm = prob.c.norm();

  const MatrixXd Au = As.leftCols(nf);
  const MatrixXd Av = As.rightCols(nc);
  const VectorXd cu = cs.head(nf);
  const VectorXd cv = cs.tail(nc);
  const MatrixXl Au_l = Au.cast<ldbl>();
  const MatrixXl Av_l = Av.cast<ldbl>();

  // Identity-like interior start.
  auto cone_identity = [&]() {
    VectorXd e = VectorXd::Zero(nc);
    e.head(lay.n_nonneg).setOnes();
    for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
      const int d = lay.psd_dim[b];
      e.segment(lay.psd_off[b], svec_length(d)) = svec(MatrixXd::Identity(d, d));
    }
    return e;
  };
  const double init_scale =
      std::max({1.0, bs.lpNorm<Eigen::Infinity>(),
                cs.lpNorm<Eigen::Infinity>()});
  VectorXd u = VectorXd::Zero(nf);            // free primal part
  VectorXd xc = std::sqrt(init_scale) * cone_identity();
  VectorXd y = VectorXd::Zero(m_eq);
  VectorXd zc = std::sqrt(init_scale) * cone_identity();

  ConicSolution sol;
  sol.stats["iters"] = json::array();
  bool trouble = false;
  double best_score = std::numeric_limits<double>::infinity();
  double last_sigma = 0.0, last_alpha = 0.0, last_dir_res = 0.0;
  int best_iter = 0;

  auto pack_x = [&]() {
    VectorXd x(lay.dim);
    x.head(nf) = u;
    x.tail(nc) = xc;
    return x;
  };
  auto pack_z = [&]() {
    VectorXd z = VectorXd::Zero(lay.dim);
    z.tail(nc) = zc;
    return z;
  };
  // Map iterates of the equilibrated problem back to the caller's units.
  auto unscale_x = [&](const VectorXd& v) {
    return VectorXd(sb * col_s.cwiseProduct(v));
  };
  auto unscale_y = [&](const VectorXd& v) {
    return VectorXd(scn * row_s.cwiseProduct(v));
  };
  auto unscale_z = [&](const VectorXd& v) {
    return VectorXd(scn * v.cwiseQuotient(col_s));
  };
  auto record_best = [&](double score, double rel_p, double rel_d,
                         double rel_g, int iter) {
    if (score < best_score) {
      if (score < 0.99 * best_score) best_iter = iter;
      best_score = score;
      sol.x = unscale_x(pack_x());
      sol.y = unscale_y(y);
      sol.z = unscale_z(pack_z());
      sol.stats["best_rel_p"] = rel_p;
      sol.stats["best_rel_d"] = rel_d;
      sol.stats["best_rel_g"] = rel_g;
    }
  };

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    sol.iterations = iter;
    const VectorXd x = pack_x();
    const VectorXd rp = bs - As * x;
    const VectorXd rd_free = cu - Au.transpose() * y;
    const VectorXd rd_cone = cv - Av.transpose() * y - zc;
    const double gap = xc.dot(zc);
    const double mu = gap / nu;

    // Convergence is judged on the problem as given: the scaled residuals
    // map back through the diagonal factors elementwise, and the feasibility
    // measures are relative to whichever of data and iterate is larger so a
    // legitimately large solution does not mask a converged run.
    const VectorXd rp_u = sb * rp.cwiseQuotient(row_s);
    VectorXd rd_u(lay.dim);
    rd_u.head(nf) = scn * rd_free.cwiseQuotient(col_s.head(nf));
    rd_u.tail(nc) = scn * rd_cone.cwiseQuotient(col_s.tail(nc));
    const double pobj = sb * scn * cs.dot(x);
    const double dobj = sb * scn * bs.dot(y);
    const double ax_norm = (prob.b - rp_u).norm();
    const double rel_p = rp_u.norm() / (1.0 + std::max(b_norm, ax_norm));
    const double rel_d =
        rd_u.norm() / (1.0 + std::max(c_norm, (prob.c - rd_u).norm()));
    const double rel_g = std::abs(pobj - dobj) /
                         (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
    const double score = std::max({rel_p, rel_d, rel_g});
    record_best(score, rel_p, rel_d, rel_g, iter);
    if (opt.verbose) {
      sol.stats["iters"].push_back(
          {{"mu", mu},
           {"rel_p", rel_p},
           {"rel_d", rel_d},
           {"rel_g", rel_g},
           {"sigma", last_sigma},
           {"alpha", last_alpha},
           {"rd_s", std::sqrt(rd_free.squaredNorm() + rd_cone.squaredNorm())},
           {"rp_s", rp.norm()},
           {"dir_res", last_dir_res}});
    }

    if (rel_p <= opt.tol && rel_d <= opt.tol && rel_g <= opt.tol) {
      sol.status = ConicStatus::kOptimal;
      sol.x = unscale_x(pack_x());
      sol.y = unscale_y(y);
      sol.z = unscale_z(pack_z());
      sol.primal_obj = pobj;
      sol.dual_obj = dobj;
      return sol;
    }

    // The attainable accuracy is limited by the conditioning of the scaled
    // systems; once the combined score stops improving there is nothing left
    // to gain, so stop with the best iterate instead of degrading it.
    if (iter - best_iter >= 8) {
      trouble = true;
      break;
    }

    // Farkas-type certificates from diverging iterates, in original units.
    const VectorXd y_u = unscale_y(y);
    const VectorXd z_u = unscale_z(pack_z());
    const double by = prob.b.dot(y_u);
    if (by > 0) {
      VectorXd res = prob.A.transpose() * y_u + z_u;
      if (res.norm() <= opt.tol * by) {
        sol.status = ConicStatus::kPrimalInfeasible;
        sol.certificate = y_u / by;
        sol.y = y_u / by;
        sol.z = z_u / by;
        sol.x = unscale_x(x);
        sol.primal_obj = pobj;
        sol.dual_obj = dobj;
        return sol;
      }
    }
    const VectorXd x_u = unscale_x(x);
    const double cx = prob.c.dot(x_u);
    if (cx < 0 && ax_norm <= opt.tol * (-cx)) {
      sol.status = ConicStatus::kDualInfeasible;
      sol.certificate = x_u / (-cx);
      sol.x = x_u / (-cx);
      sol.y = y_u;
      sol.z = z_u;
      sol.primal_obj = pobj;
      sol.dual_obj = dobj;
      return sol;
    }

    Scaling sc = make_scaling(lay, xc, zc);
    if (!sc.ok) {
      trouble = true;
      break;
    }
    const VectorXl w2_l = sc.w2.cast<ldbl>();
    std::vector<MatrixXl> W_l;
    W_l.reserve(sc.W.size());
    for (const auto& W : sc.W) W_l.push_back(W.cast<ldbl>());

    // KKT: [[Av F Av^T, Au], [Au^T, 0]].  The scaling F has condition number
    // on the order of 1/mu near convergence, and forming the Schur complement
    // in double introduces absolute errors of eps * ||F|| that stop the
    // refinement loop from contracting once mu is small.  The whole reduced
    // system is therefore formed, factored, and solved in extended precision;
    // the matrices involved are small enough that this is cheap.
    MatrixXl FAt(nc, m_eq);
    for (int k = 0; k < m_eq; ++k)
      FAt.col(k) = apply_scaling_l(lay, w2_l, W_l, Av_l.row(k).transpose());
    MatrixXl kkt = MatrixXl::Zero(m_eq + nf, m_eq + nf);
    kkt.topLeftCorner(m_eq, m_eq).noalias() = Av_l * FAt;
    kkt.topRightCorner(m_eq, nf) = Au_l;
    kkt.bottomLeftCorner(nf, m_eq) = Au_l.transpose();
    // The scaled block has entries ~1/mu while the free-variable rows stay
    // O(1); LU backward error is relative to the matrix norm as a whole, so
    // without balancing the small rows absorb absolute errors of
    // eps * ||F|| and the dual residual stalls there.  Symmetric Ruiz
    // equilibration keeps every row's error relative to its own scale.
    MatrixXl kkt_b = kkt;
    VectorXl dk = VectorXl::Ones(m_eq + nf);
    for (int pass = 0; pass < 5; ++pass) {
      VectorXl s(m_eq + nf);
      for (int i = 0; i < m_eq + nf; ++i) {
        const ldbl mx = kkt_b.row(i).cwiseAbs().maxCoeff();
        s[i] = mx > 0 ? (ldbl)1 / Eigen::numext::sqrt(mx) : (ldbl)1;
      }
      kkt_b = s.asDiagonal() * kkt_b * s.asDiagonal();
      dk = dk.cwiseProduct(s);
    }
    // Factor a lightly regularized copy; refinement below targets the true
    // matrix, so the perturbation does not cap the attainable accuracy.
    const ldbl delta =
        (ldbl)1e-14 * std::max<ldbl>(1, kkt_b.topLeftCorner(m_eq, m_eq)
                                            .diagonal()
                                            .cwiseAbs()
                                            .maxCoeff());
    kkt_b.topLeftCorner(m_eq, m_eq).diagonal().array() += delta;
    kkt_b.bottomRightCorner(nf, nf).diagonal().array() -= delta;
    Eigen::PartialPivLU<MatrixXl> lu(kkt_b);
    auto kkt_solve = [&](const VectorXl& rhs) {
      VectorXl sol_v = dk.cwiseProduct(lu.solve(dk.cwiseProduct(rhs)));
      sol_v += dk.cwiseProduct(
          lu.solve(dk.cwiseProduct(rhs - kkt * sol_v)));
      return sol_v;
    };

    // One pass through the reduced normal equations.
    auto solve_once = [&](const VectorXl& r1, const VectorXl& r2f,
                          const VectorXl& r2c, const VectorXl& r3,
                          VectorXl& dxc, VectorXl& du, VectorXl& dy,
                          VectorXl& dzc) {
      VectorXl rhs(m_eq + nf);
      rhs.head(m_eq) =
          r1 - Av_l * r3 + Av_l * apply_scaling_l(lay, w2_l, W_l, r2c);
      rhs.tail(nf) = r2f;
      const VectorXl sol_v = kkt_solve(rhs);
      dy = sol_v.head(m_eq);
      du = sol_v.tail(nf);
      dzc = r2c - Av_l.transpose() * dy;
      dxc = r3 - apply_scaling_l(lay, w2_l, W_l, dzc);
    };

    // Newton system: the elimination through the ill-conditioned scaling
    // still loses digits, so refine against the full system (equality, dual,
    // and scaled-complementarity rows), with residuals accumulated in
    // extended precision as well.
    auto solve_dir = [&](const VectorXd& d_comp, VectorXd& dxc_d,
                         VectorXd& du_d, VectorXd& dy_d, VectorXd& dzc_d) {
      const VectorXl rp_l = rp.cast<ldbl>();
      const VectorXl rdf_l = rd_free.cast<ldbl>();
      const VectorXl rdc_l = rd_cone.cast<ldbl>();
      const VectorXl dcomp_l = d_comp.cast<ldbl>();
      VectorXl dxc, du, dy, dzc;
      solve_once(rp_l, rdf_l, rdc_l, dcomp_l, dxc, du, dy, dzc);
      auto full_residual = [&](const VectorXl& xcv, const VectorXl& uv,
                               const VectorXl& yv, const VectorXl& zcv,
                               VectorXl& rho1, VectorXl& rho2f,
                               VectorXl& rho2c, VectorXl& rho3) -> ldbl {
        rho1 = rp_l - (Au_l * uv + Av_l * xcv);
        rho2f = rdf_l - Au_l.transpose() * yv;
        rho2c = rdc_l - (Av_l.transpose() * yv + zcv);
        rho3 = dcomp_l - (apply_scaling_l(lay, w2_l, W_l, zcv) + xcv);
        return Eigen::numext::sqrt(rho1.squaredNorm() + rho2f.squaredNorm() +
                                   rho2c.squaredNorm() + rho3.squaredNorm());
      };
      VectorXl rho1, rho2f, rho2c, rho3;
      ldbl best = full_residual(dxc, du, dy, dzc, rho1, rho2f, rho2c, rho3);
      for (int pass = 0; pass < 4; ++pass) {
        VectorXl cx, cu2, cy, cz;
        solve_once(rho1, rho2f, rho2c, rho3, cx, cu2, cy, cz);
        VectorXl nx = dxc + cx, nu2 = du + cu2, ny = dy + cy, nz = dzc + cz;
        VectorXl t1, t2, t3, t4;
        const ldbl cand = full_residual(nx, nu2, ny, nz, t1, t2, t3, t4);
        if (!(cand < best)) break;
        dxc = nx;
        du = nu2;
        dy = ny;
        dzc = nz;
        rho1 = t1;
        rho2f = t2;
        rho2c = t3;
        rho3 = t4;
        best = cand;
      }
      dxc_d = dxc.cast<double>();
      du_d = du.cast<double>();
      dy_d = dy.cast<double>();
      dzc_d = dzc.cast<double>();
      last_dir_res = static_cast<double>(best);
    };

    // Predictor.
    VectorXd dxa, dua, dya, dza;
    solve_dir(-xc, dxa, dua, dya, dza);
    const double a_aff = std::min({1.0, step_limit(lay, xc, dxa),
                                   step_limit(lay, zc, dza)});
    const double gap_aff = (xc + a_aff * dxa).dot(zc + a_aff * dza);
    double sigma = std::pow(std::max(0.0, gap_aff) / gap, 3);
    sigma = std::clamp(sigma, 0.0, 1.0);
    last_sigma = sigma;

    // Corrector target in scaled space.
    VectorXd d_comp(nc);
    for (int i = 0; i < lay.n_nonneg; ++i)
      d_comp[i] = (sigma * mu - xc[i] * zc[i] - dxa[i] * dza[i]) / zc[i];
    for (std::size_t b = 0; b < lay.psd_off.size(); ++b) {
      const int d = lay.psd_dim[b];
      const int off = lay.psd_off[b];
      const int len = svec_length(d);
      MatrixXd dX = smat(dxa.segment(off, len), d);
      MatrixXd dZ = smat(dza.segment(off, len), d);
      MatrixXd dXs = sc.Rinv[b] * dX * sc.Rinv[b].transpose();
      MatrixXd dZs = sc.R[b].transpose() * dZ * sc.R[b];
      MatrixXd cross = 0.5 * (dXs * dZs + dZs * dXs);
      MatrixXd target(d, d);
      const VectorXd& lam = sc.lam[b];
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
          double t = -cross(i, j);
          if (i == j) t += sigma * mu - lam[i] * lam[i];
          target(i, j) = t / (0.5 * (lam[i] + lam[j]));
        }
      d_comp.segment(off, len) =
          svec(sc.R[b] * 0.5 * (target + target.transpose()) *
               sc.R[b].transpose());
    }

    VectorXd dxc, du, dy, dzc;
    solve_dir(d_comp, dxc, du, dy, dzc);
    // A common primal-dual step keeps the equality residuals and the
    // complementarity gap contracting at the same rate, so the gap cannot
    // outrun feasibility and wreck the scaling's conditioning.
    const double alpha =
        std::min(1.0, 0.98 * std::min(step_limit(lay, xc, dxc),
                                      step_limit(lay, zc, dzc)));
    if (!(alpha > 0) || !dxc.allFinite() || !dzc.allFinite() ||
        !du.allFinite() || !dy.allFinite()) {
      trouble = true;
      break;
    }
    last_alpha = alpha;
    xc += alpha * dxc;
    u += alpha * du;
    y += alpha * dy;
    zc += alpha * dzc;
  }

  sol.status =
      trouble ? ConicStatus::kNumericalTrouble : ConicStatus::kMaxIterations;
  sol.primal_obj = prob.c.dot(sol.x);
  sol.dual_obj = prob.b.dot(sol.y);
  sol.stats["best_score"] = best_score;
  return sol;
}

bool verify_solution(const ConicProblem& prob, const ConicSolution& sol,
                     double tol, json* report) {
  const Layout lay = make_layout(prob.cone);
  json rep;
  bool ok = false;
  if (sol.status == ConicStatus::kOptimal) {
    const VectorXd& x = sol.x;
    const VectorXd& y = sol.y;
    const VectorXd& z = sol.z;
    const VectorXd ax = prob.A * x;
    const VectorXd aty_z = prob.A.transpose() * y + z;
    const double rel_p =
        (ax - prob.b).norm() / (1.0 + std::max(prob.b.norm(), ax.norm()));
    const double rel_d = (aty_z - prob.c).norm() /
                         (1.0 + std::max(prob.c.norm(), aty_z.norm()));
    const double pobj = prob.c.dot(x), dobj = prob.b.dot(y);
    const double rel_g = std::abs(pobj - dobj) /
                         (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
    const double scale_x = 1.0 + x.lpNorm<Eigen::Infinity>();
    const double scale_z = 1.0 + z.lpNorm<Eigen::Infinity>();
    const double viol_x = cone_violation(lay, x.tail(lay.n_cone));
    const double viol_z = cone_violation(lay, z.tail(lay.n_cone));
    const double free_z = lay.n_free
                              ? z.head(lay.n_free).lpNorm<Eigen::Infinity>()
                              : 0.0;
    rep = {{"rel_p", rel_p},     {"rel_d", rel_d},   {"rel_g", rel_g},
           {"cone_x", viol_x},   {"cone_z", viol_z}, {"free_z", free_z}};
    ok = rel_p <= tol && rel_d <= tol && rel_g <= tol &&
         viol_x <= tol * scale_x && viol_z <= tol * scale_z &&
         free_z <= tol * scale_z;
  } else if (sol.status == ConicStatus::kPrimalInfeasible) {
    const VectorXd& y = sol.certificate;
    const double by = prob.b.dot(y);
    VectorXd s = -prob.A.transpose() * y;  // implied dual slack
    const double free_part =
        lay.n_free ? s.head(lay.n_free).lpNorm<Eigen::Infinity>() : 0.0;
    const double viol = cone_violation(lay, s.tail(lay.n_cone));
    const double scale = 1.0 + y.lpNorm<Eigen::Infinity>() *
                                   (1.0 + prob.A.lpNorm<Eigen::Infinity>());
    rep = {{"b_dot_y", by}, {"slack_violation", viol}, {"free_part", free_part}};
    ok = std::abs(by - 1.0) <= tol && viol <= tol * scale &&
         free_part <= tol * scale;
  } else if (sol.status == ConicStatus::kDualInfeasible) {
    const VectorXd& x = sol.certificate;
    const double cx = prob.c.dot(x);
    const double viol = cone_violation(lay, x.tail(lay.n_cone));
    const double ax = (prob.A * x).norm();
    const double scale = 1.0 + x.lpNorm<Eigen::Infinity>();
    rep = {{"c_dot_x", cx}, {"Ax", ax}, {"cone_violation", viol}};
    ok = std::abs(cx + 1.0) <= tol && ax <= tol * scale && viol <= tol * scale;
  }
  if (report) *report = rep;
  return ok;
}

}  // namespace densynth
