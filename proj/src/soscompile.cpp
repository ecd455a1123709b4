#include "densynth/soscompile.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace densynth {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

struct BlockPlan {
  const MatrixSosConstraint* src = nullptr;
  std::vector<int> corner_deg;    // factor degree h_i per corner
  std::vector<int> corner_count;  // monomials up to h_i
  std::vector<int> corner_off;    // first Gram row of corner i
  int side = 0;
  int x_offset = 0;
  int svec_len = 0;
};

// Largest total degree carrying a fixed or decision-dependent coefficient.
int active_degree(const AffinePoly& p) {
  const MonomialTable& tab = p.constant_part().table();
  int deg = 0;
  for (int e = 0; e < tab.size(); ++e) {
    bool active = p.constant_part().coeffs()[e] != 0.0;
    if (!active)
      for (const auto& [name, jac] : p.terms())
        if (jac.row(e).cwiseAbs().maxCoeff() > 0.0) {
          active = true;
          break;
        }
    if (active) deg = std::max(deg, tab.total_degree(e));
  }
  return deg;
}

// A polynomial whose top-degree coefficient is fixed and odd-degree can never
// be a sum of squares; flag it before the solver burns time on it.
void reject_fixed_odd_leading(const MatrixSosConstraint& ct, int deg) {
  if (ct.side() != 1 || deg % 2 == 0) return;
  const AffinePoly& p = ct.entries[0][0];
  const MonomialTable& tab = p.constant_part().table();
  for (int e = 0; e < tab.size(); ++e) {
    if (tab.total_degree(e) != deg) continue;
    if (p.constant_part().coeffs()[e] == 0.0) continue;
    bool cancellable = false;
    for (const auto& [name, jac] : p.terms())
      if (jac.row(e).cwiseAbs().maxCoeff() > 0.0) {
        cancellable = true;
        break;
      }
    if (!cancellable)
      throw std::invalid_argument(
          "assemble_sdp: constraint '" + ct.label +
          "' has a fixed leading coefficient of odd degree " +
          std::to_string(deg) + "; no sum of squares can match it");
  }
}

bool exponent_minus(const MultiIndex& e, const MultiIndex& r, MultiIndex& out) {
  out.resize(e.size());
  for (std::size_t t = 0; t < e.size(); ++t) {
    out[t] = e[t] - r[t];
    if (out[t] < 0) return false;
  }
  return true;
}

int checked_offset(const SynthesisProgram& prog, const std::string& name,
                   const char* where) {
  const int off = prog.block_offset(name);
  if (off < 0)
    throw std::invalid_argument(std::string("assemble_sdp: ") + where +
                                " references unknown block '" + name + "'");
  return off;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

BlockPlan plan_constraint(const MatrixSosConstraint& ct, int n) {
  const int p = ct.side();
  BlockPlan bp;
  bp.src = &ct;
  bp.corner_deg.assign(p, 0);
  std::vector<std::vector<int>> entry_deg(p, std::vector<int>(p, 0));
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < p; ++k)
      entry_deg[i][k] = active_degree(ct.entries[i][k]);
  int deg = 0;
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < p; ++k) deg = std::max(deg, entry_deg[i][k]);
  reject_fixed_odd_leading(ct, deg);

  if (ct.gram_degree >= 0) {
    bp.corner_deg.assign(p, ct.gram_degree);
  } else {
    // Diagonal-driven degrees, raised only for off-diagonal coverage; raising
    // the corner whose diagonal entry has the higher degree keeps the forced
    // zero pattern off the Gram diagonal whenever possible.
    for (int i = 0; i < p; ++i) bp.corner_deg[i] = entry_deg[i][i] / 2;
    bool changed = true;
    while (changed) {
      changed = false;
      for (int i = 0; i < p; ++i)
        for (int k = i + 1; k < p; ++k)
          while (bp.corner_deg[i] + bp.corner_deg[k] < entry_deg[i][k]) {
            ++bp.corner_deg[entry_deg[i][i] >= entry_deg[k][k] ? i : k];
            changed = true;
          }
    }
  }
  bp.corner_count.resize(p);
  bp.corner_off.resize(p);
  bp.side = 0;
  for (int i = 0; i < p; ++i) {
    bp.corner_count[i] = MonomialTable::count(n, bp.corner_deg[i]);
    bp.corner_off[i] = bp.side;
    bp.side += bp.corner_count[i];
  }
  bp.svec_len = svec_length(bp.side);
  return bp;
}

}  // namespace

SdpProblem assemble_sdp(const SynthesisProgram& prog) {
  if (prog.sos.empty())
    throw std::invalid_argument(
        "assemble_sdp: program has no sum-of-squares constraints");
  const int n_free = prog.total_dim();
  const int n = prog.sos.front().entries[0][0].n_vars();

  std::vector<BlockPlan> plans;
  ConeSpec cone;
  cone.n_free = n_free;
  int x_dim = n_free;
  int max_rows = static_cast<int>(prog.equalities.size());
  for (const auto& ct : prog.sos) {
    if (ct.side() < 1 || ct.entries[0][0].n_vars() != n)
      throw std::invalid_argument("assemble_sdp: malformed constraint '" +
                                  ct.label + "'");
    BlockPlan bp = plan_constraint(ct, n);
    bp.x_offset = x_dim;
    x_dim += bp.svec_len;
    const int p = ct.side();
    for (int i = 0; i < p; ++i)
      for (int k = i; k < p; ++k) {
        const int match = std::max(active_degree(ct.entries[i][k]),
                                   bp.corner_deg[i] + bp.corner_deg[k]);
        max_rows += MonomialTable::count(n, match);
      }
    cone.psd_dims.push_back(bp.side);
    plans.push_back(std::move(bp));
  }

  MatrixXd A = MatrixXd::Zero(max_rows, x_dim);
  VectorXd b = VectorXd::Zero(max_rows);
  std::vector<const std::string*> row_label(max_rows);

  int row = 0;
  for (const auto& bp : plans) {
    const MatrixSosConstraint& ct = *bp.src;
    const int p = ct.side();
    MultiIndex rem;
    for (int i = 0; i < p; ++i)
      for (int k = i; k < p; ++k) {
        const AffinePoly& entry = ct.entries[i][k];
        const MonomialTable& etab = entry.constant_part().table();
        const int match = std::max(active_degree(entry),
                                   bp.corner_deg[i] + bp.corner_deg[k]);
        auto match_tab = MonomialTable::get(n, match);
        auto zi_tab = MonomialTable::get(n, bp.corner_deg[i]);
        auto zk_tab = MonomialTable::get(n, bp.corner_deg[k]);
        for (int e = 0; e < match_tab->size(); ++e, ++row) {
          row_label[row] = &ct.label;
          const MultiIndex& ex = match_tab->exponent(e);
          const int ei = etab.index_of(ex);
          if (ei >= 0) {
            b[row] = -entry.constant_part().coeffs()[ei];
            for (const auto& [name, jac] : entry.terms())
              A.row(row).segment(checked_offset(prog, name, "constraint"),
                                 jac.cols()) += jac.row(ei);
          }
          // Ordered factor pairs (r in corner i, s in corner k) whose
          // monomials multiply to ex.  These enumerate every Gram element
          // feeding entry (i, k); the transpose entry needs no rows of its
          // own because the Gram matrix is symmetric.
          for (int r = 0; r < bp.corner_count[i]; ++r) {
            if (!exponent_minus(ex, zi_tab->exponent(r), rem)) continue;
            const int s = zk_tab->index_of(rem);
            if (s < 0) continue;
            const int p_idx = bp.corner_off[i] + r;
            const int q_idx = bp.corner_off[k] + s;
            const int si = svec_index(bp.side, p_idx, q_idx);
            A(row, bp.x_offset + si) -= (p_idx == q_idx) ? 1.0 : kInvSqrt2;
          }
        }
      }
  }
  for (const auto& eq : prog.equalities) {
    row_label[row] = &eq.label;
    for (const auto& [name, vterm] : eq.terms) {
      const int off = checked_offset(prog, name, "equality");
      if (prog.block(name).dim != vterm.cols())
        throw std::invalid_argument("assemble_sdp: equality '" + eq.label +
                                    "' has a wrong-sized term for '" + name +
                                    "'");
      A.row(row).segment(off, vterm.cols()) = vterm;
    }
    b[row] = eq.rhs;
    ++row;
  }

  // Scale every row to unit max magnitude; drop rows that say 0 == 0 and
  // reject rows that say 0 == nonzero (an unmatchable coefficient).  Rows
  // that restate a combination of earlier rows are dropped as well: the same
  // coefficient identity can surface in several blocks (a zero forced both by
  // a scalar constraint and by a matrix corner), and duplicated equalities
  // would leave the solver's normal equations rank deficient.  The right-hand
  // side rides along in the augmented vector, so a row that repeats known
  // coefficients with a conflicting value stays visible to the solver.
  std::vector<int> keep;
  std::vector<VectorXd> row_basis;
  keep.reserve(max_rows);
  for (int r = 0; r < max_rows; ++r) {
    const double scale = A.row(r).cwiseAbs().maxCoeff();
    if (scale == 0.0) {
      if (b[r] != 0.0)
        throw std::invalid_argument("assemble_sdp: constraint '" +
                                    *row_label[r] +
                                    "' fixes a coefficient no term can reach");
      continue;
    }
    A.row(r) /= scale;
    b[r] /= scale;
    VectorXd aug(x_dim + 1);
    aug << A.row(r).transpose(), b[r];
    const double norm0 = aug.norm();
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : row_basis) aug -= q.dot(aug) * q;
    if (aug.norm() <= 1e-9 * norm0) continue;
    row_basis.push_back(aug / aug.norm());
    keep.push_back(r);
  }

  SdpProblem sdp;
  sdp.conic.cone = cone;
  sdp.n_free = n_free;
  sdp.conic.A.resize(static_cast<int>(keep.size()), x_dim);
  sdp.conic.b.resize(static_cast<int>(keep.size()));
  for (int r = 0; r < static_cast<int>(keep.size()); ++r) {
    sdp.conic.A.row(r) = A.row(keep[r]);
    sdp.conic.b[r] = b[keep[r]];
  }

  VectorXd c = VectorXd::Zero(x_dim);
  for (const auto& [name, v] : prog.objective) {
    const int off = checked_offset(prog, name, "objective");
    if (prog.block(name).dim != v.size())
      throw std::invalid_argument(
          "assemble_sdp: objective has a wrong-sized term for '" + name + "'");
    c.segment(off, v.size()) = v;
  }
  sdp.obj_scale = c.size() > 0 ? c.cwiseAbs().maxCoeff() : 0.0;
  if (sdp.obj_scale == 0.0) sdp.obj_scale = 1.0;
  sdp.conic.c = c / sdp.obj_scale;

  for (const auto& bp : plans)
    sdp.grams.push_back({bp.src->label, bp.x_offset, bp.src->side(), bp.side,
                         bp.corner_deg, bp.corner_off});

  nlohmann::json meta;
  meta["rows"] = static_cast<int>(keep.size());
  meta["cols"] = x_dim;
  meta["n_free"] = n_free;
  meta["obj_scale"] = sdp.obj_scale;
  for (const auto& g : sdp.grams)
    meta["gram_sides"][g.label] = g.side;
  sdp.metadata = std::move(meta);
  return sdp;
}

SdpSolutionView extract_solution(const SynthesisProgram& prog,
                                 const SdpProblem& sdp,
                                 const ConicSolution& sol) {
  if (sol.x.size() != sdp.conic.cone.dim())
    throw std::invalid_argument("extract_solution: point size mismatch");
  SdpSolutionView view;
  view.blocks = prog.split(sol.x.head(sdp.n_free));
  view.objective = sdp.obj_scale * sdp.conic.c.dot(sol.x);
  return view;
}

MatrixXd gram_matrix(const SdpProblem& sdp, const ConicSolution& sol,
                     const std::string& label) {
  for (const auto& g : sdp.grams)
    if (g.label == label)
      return smat(sol.x.segment(g.x_offset, svec_length(g.side)), g.side);
  throw std::invalid_argument("gram_matrix: no block named '" + label + "'");
}

void write_sdp(const SdpProblem& sdp, const std::string& path) {
  std::ostringstream out;
  out << "densynth-sdp 1\n";
  out << "obj_scale " << fmt17(sdp.obj_scale) << "\n";
  const ConeSpec& cone = sdp.conic.cone;
  out << "cone " << cone.n_free << " " << cone.n_nonneg << " "
      << cone.psd_dims.size();
  for (int d : cone.psd_dims) out << " " << d;
  out << "\n";
  out << "grams " << sdp.grams.size() << "\n";
  for (const auto& g : sdp.grams) {
    out << g.label << " " << g.x_offset << " " << g.entry_side << " " << g.side;
    for (int h : g.corner_degrees) out << " " << h;
    for (int o : g.corner_offsets) out << " " << o;
    out << "\n";
  }
  int nnz = 0;
  for (int r = 0; r < sdp.conic.A.rows(); ++r)
    for (int j = 0; j < sdp.conic.A.cols(); ++j)
      if (sdp.conic.A(r, j) != 0.0) ++nnz;
  out << "A " << sdp.conic.A.rows() << " " << sdp.conic.A.cols() << " " << nnz
      << "\n";
  for (int r = 0; r < sdp.conic.A.rows(); ++r)
    for (int j = 0; j < sdp.conic.A.cols(); ++j)
      if (sdp.conic.A(r, j) != 0.0)
        out << r << " " << j << " " << fmt17(sdp.conic.A(r, j)) << "\n";
  out << "b " << sdp.conic.b.size() << "\n";
  for (int r = 0; r < sdp.conic.b.size(); ++r)
    out << fmt17(sdp.conic.b[r]) << "\n";
  out << "c " << sdp.conic.c.size() << "\n";
  for (int j = 0; j < sdp.conic.c.size(); ++j)
    out << fmt17(sdp.conic.c[j]) << "\n";

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_sdp: cannot open " + path);
  const std::string s = out.str();
  f.write(s.data(), static_cast<std::streamsize>(s.size()));
}

SdpProblem read_sdp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_sdp: cannot open " + path);
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("read_sdp: malformed file (" + what + "): " +
                             path);
  };
  std::string tag;
  int version = 0;
  if (!(f >> tag >> version) || tag != "densynth-sdp" || version != 1)
    fail("header");
  SdpProblem sdp;
  if (!(f >> tag >> sdp.obj_scale) || tag != "obj_scale") fail("obj_scale");
  std::size_t n_psd = 0;
  if (!(f >> tag >> sdp.conic.cone.n_free >> sdp.conic.cone.n_nonneg >>
        n_psd) ||
      tag != "cone")
    fail("cone");
  sdp.n_free = sdp.conic.cone.n_free;
  sdp.conic.cone.psd_dims.resize(n_psd);
  for (std::size_t i = 0; i < n_psd; ++i)
    if (!(f >> sdp.conic.cone.psd_dims[i])) fail("cone dims");
  std::size_t n_grams = 0;
  if (!(f >> tag >> n_grams) || tag != "grams") fail("grams");
  sdp.grams.resize(n_grams);
  for (auto& g : sdp.grams) {
    if (!(f >> g.label >> g.x_offset >> g.entry_side >> g.side))
      fail("gram block");
    g.corner_degrees.resize(g.entry_side);
    g.corner_offsets.resize(g.entry_side);
    for (int& h : g.corner_degrees)
      if (!(f >> h)) fail("gram corner degree");
    for (int& o : g.corner_offsets)
      if (!(f >> o)) fail("gram corner offset");
  }
  int rows = 0, cols = 0, nnz = 0;
  if (!(f >> tag >> rows >> cols >> nnz) || tag != "A") fail("A");
  sdp.conic.A = MatrixXd::Zero(rows, cols);
  for (int t = 0; t < nnz; ++t) {
    int r = 0, j = 0;
    double v = 0.0;
    if (!(f >> r >> j >> v)) fail("A triplet");
    sdp.conic.A(r, j) = v;
  }
  int len = 0;
  if (!(f >> tag >> len) || tag != "b" || len != rows) fail("b");
  sdp.conic.b.resize(len);
  for (int r = 0; r < len; ++r)
    if (!(f >> sdp.conic.b[r])) fail("b entry");
  if (!(f >> tag >> len) || tag != "c" || len != cols) fail("c");
  sdp.conic.c.resize(len);
  for (int j = 0; j < len; ++j)
    if (!(f >> sdp.conic.c[j])) fail("c entry");
  return sdp;
}

}  // namespace densynth
