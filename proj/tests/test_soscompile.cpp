#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include <densynth/gedmd.hpp>
#include <densynth/soscompile.hpp>
#include <densynth/systems.hpp>

using namespace densynth;

namespace {

// Rebuilds the matrix polynomial certified by a Gram block entirely through
// dense Poly arithmetic, independently of the compiler's coefficient rows.
std::vector<std::vector<Poly>> certified_matrix(const SdpProblem& sdp,
                                                const ConicSolution& sol,
                                                const std::string& label,
                                                int n_vars) {
  const GramBlockInfo* info = nullptr;
  for (const auto& g : sdp.grams)
    if (g.label == label) info = &g;
  REQUIRE(info != nullptr);
  const MatrixXd G = gram_matrix(sdp, sol, label);
  const int p = info->entry_side;
  int max_h = 0;
  for (int h : info->corner_degrees) max_h = std::max(max_h, h);
  std::vector<std::vector<Poly>> z(p);  // factor monomials per corner
  for (int i = 0; i < p; ++i) {
    auto tab = MonomialTable::get(n_vars, info->corner_degrees[i]);
    for (int r = 0; r < tab->size(); ++r)
      z[i].push_back(Poly::from_terms(n_vars, {{tab->exponent(r), 1.0}}));
  }
  std::vector<std::vector<Poly>> out(
      p, std::vector<Poly>(p, Poly(n_vars, std::max(1, 2 * max_h))));
  for (int i = 0; i < p; ++i)
    for (int k = 0; k < p; ++k)
      for (std::size_t r = 0; r < z[i].size(); ++r)
        for (std::size_t s = 0; s < z[k].size(); ++s)
          out[i][k] += G(info->corner_offsets[i] + static_cast<int>(r),
                         info->corner_offsets[k] + static_cast<int>(s)) *
                       z[i][r] * z[k][s];
  return out;
}

double max_coeff_gap(const Poly& a, const Poly& b) {
  const int deg = std::max(a.degree(), b.degree());
  return (a.embedded(deg).coeffs() - b.embedded(deg).coeffs())
      .cwiseAbs()
      .maxCoeff();
}

SynthesisProgram one_constraint(AffinePoly p, const std::string& label) {
  SynthesisProgram prog;
  prog.sos.push_back({label, {{std::move(p)}}});
  return prog;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("a fixed positive polynomial receives a Gram certificate") {
  // x^2 + 1 = z^T G z with z = (1, x); any PSD G matching the coefficients
  // certifies nonnegativity.
  Poly p = Poly::from_terms(1, {{{2}, 1.0}, {{0}, 1.0}});
  SynthesisProgram prog = one_constraint(AffinePoly(p), "pos");
  SdpProblem sdp = assemble_sdp(prog);
  CHECK(sdp.n_free == 0);
  REQUIRE(sdp.grams.size() == 1);
  REQUIRE(sdp.grams[0].corner_degrees == std::vector<int>{1});
  CHECK(sdp.grams[0].side == 2);

  ConicSolution sol = solve_conic(sdp.conic);
  REQUIRE(sol.status == ConicStatus::kOptimal);
  MatrixXd G = gram_matrix(sdp, sol, "pos");
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(G);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  auto M = certified_matrix(sdp, sol, "pos", 1);
  CHECK(max_coeff_gap(M[0][0], p) < 1e-6);
}

TEST_CASE("minimizing a shifted square recovers the completed-square value") {
  // min t subject to x^2 - 4x + t SOS; the optimum is t = 4 with the
  // rank-one certificate (x - 2)^2.
  Poly fixed = Poly::from_terms(1, {{{2}, 1.0}, {{1}, -4.0}});
  MatrixXd jac = MatrixXd::Zero(MonomialTable::count(1, 2), 1);
  jac(0, 0) = 1.0;  // t enters the constant coefficient
  AffinePoly con = AffinePoly(fixed) + AffinePoly::decision("t", jac, 1, 2);

  SynthesisProgram prog;
  prog.blocks.push_back({"t", 1});
  prog.objective["t"] = VectorXd::Ones(1);
  prog.sos.push_back({"shifted", {{con}}});

  SdpProblem sdp = assemble_sdp(prog);
  CHECK(sdp.obj_scale == doctest::Approx(1.0));
  ConicSolution sol = solve_conic(sdp.conic);
  REQUIRE(sol.status == ConicStatus::kOptimal);
  CHECK(verify_solution(sdp.conic, sol, 1e-6));

  SdpSolutionView view = extract_solution(prog, sdp, sol);
  CHECK(view.objective == doctest::Approx(4.0).epsilon(1e-5));
  CHECK(view.blocks.at("t")[0] == doctest::Approx(4.0).epsilon(1e-5));

  auto M = certified_matrix(sdp, sol, "shifted", 1);
  Poly achieved = Poly::from_terms(
      1, {{{2}, 1.0}, {{1}, -4.0}, {{0}, view.blocks.at("t")[0]}});
  CHECK(max_coeff_gap(M[0][0], achieved) < 1e-5);
}

TEST_CASE("objective scaling and equality rows survive compilation") {
  // min 5a subject to a >= 0 and 3a = 6: optimum a = 2, cost 10.
  SynthesisProgram prog;
  prog.blocks.push_back({"a", 1});
  prog.objective["a"] = 5.0 * VectorXd::Ones(1);
  prog.sos.push_back(
      {"nonneg", {{AffinePoly::decision("a", MatrixXd::Ones(1, 1), 1, 0)}}});
  LinearEquality eq;
  eq.label = "pin";
  eq.terms["a"] = 3.0 * Eigen::RowVectorXd::Ones(1);
  eq.rhs = 6.0;
  prog.equalities.push_back(eq);

  SdpProblem sdp = assemble_sdp(prog);
  CHECK(sdp.obj_scale == doctest::Approx(5.0));
  for (int r = 0; r < sdp.conic.A.rows(); ++r)
    CHECK(sdp.conic.A.row(r).cwiseAbs().maxCoeff() == doctest::Approx(1.0));

  ConicSolution sol = solve_conic(sdp.conic);
  REQUIRE(sol.status == ConicStatus::kOptimal);
  SdpSolutionView view = extract_solution(prog, sdp, sol);
  CHECK(view.blocks.at("a")[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(view.objective == doctest::Approx(10.0).epsilon(1e-6));
}

TEST_CASE("a polynomial that dips negative is reported infeasible") {
  Poly p = Poly::from_terms(1, {{{2}, 1.0}, {{0}, -1.0}});  // x^2 - 1
  SdpProblem sdp = assemble_sdp(one_constraint(AffinePoly(p), "dip"));
  ConicSolution sol = solve_conic(sdp.conic);
  REQUIRE(sol.status == ConicStatus::kPrimalInfeasible);
  CHECK(verify_solution(sdp.conic, sol, 1e-6));
}

TEST_CASE("fixed odd-degree leading terms are rejected at compile time") {
  Poly p = Poly::from_terms(1, {{{3}, 1.0}, {{1}, 1.0}});  // x^3 + x
  CHECK_THROWS_AS(assemble_sdp(one_constraint(AffinePoly(p), "odd")),
                  std::invalid_argument);

  // A decision-dependent cubic coefficient is not rejected: the solver may
  // simply set it to zero.
  MatrixXd jac = MatrixXd::Zero(MonomialTable::count(1, 3), 1);
  jac(3, 0) = 1.0;  // graded order in one variable: 1, x, x^2, x^3
  AffinePoly con =
      AffinePoly(Poly::from_terms(1, {{{2}, 1.0}})) +
      AffinePoly::decision("t", jac, 1, 3);
  SynthesisProgram prog;
  prog.blocks.push_back({"t", 1});
  prog.sos.push_back({"cubic", {{con}}});
  SdpProblem sdp = assemble_sdp(prog);
  ConicSolution sol = solve_conic(sdp.conic);
  REQUIRE(sol.status == ConicStatus::kOptimal);
  CHECK(std::abs(sol.x[0]) < 1e-6);  // the cubic coefficient collapses
}

TEST_CASE("matrix constraints reproduce their entries through the Gram block") {
  // [[1 + x^2, x], [x, 1]] is positive definite for every x (det = 1).
  AffinePoly m00(Poly::from_terms(1, {{{2}, 1.0}, {{0}, 1.0}}));
  AffinePoly m01(Poly::from_terms(1, {{{1}, 1.0}}));
  AffinePoly m11(Poly::constant(1, 1.0));
  SynthesisProgram prog;
  MatrixSosConstraint ct;
  ct.label = "pair";
  ct.entries = {{m00, m01}, {m01, m11}};
  prog.sos.push_back(ct);

  SdpProblem sdp = assemble_sdp(prog);
  REQUIRE(sdp.grams.size() == 1);
  CHECK(sdp.grams[0].entry_side == 2);
  // The (0,0) entry has degree 2, the (1,1) entry is constant, so the factor
  // basis is {1, x} for the first row and {1} for the second.
  CHECK(sdp.grams[0].corner_degrees == std::vector<int>{1, 0});
  CHECK(sdp.grams[0].side == 3);

  ConicSolution sol = solve_conic(sdp.conic);
  REQUIRE(sol.status == ConicStatus::kOptimal);
  auto M = certified_matrix(sdp, sol, "pair", 1);
  CHECK(max_coeff_gap(M[0][0], m00.constant_part()) < 1e-6);
  CHECK(max_coeff_gap(M[0][1], m01.constant_part()) < 1e-6);
  CHECK(max_coeff_gap(M[1][0], m01.constant_part()) < 1e-6);
  CHECK(max_coeff_gap(M[1][1], m11.constant_part()) < 1e-6);
}

TEST_CASE("a matrix that loses definiteness is reported infeasible") {
  // [[1, 2], [2, 1 + x^2]] has det = x^2 - 3 < 0 near the origin.
  AffinePoly m00(Poly::constant(1, 1.0));
  AffinePoly m01(Poly::constant(1, 2.0));
  AffinePoly m11(Poly::from_terms(1, {{{2}, 1.0}, {{0}, 1.0}}));
  SynthesisProgram prog;
  MatrixSosConstraint ct;
  ct.label = "bad";
  ct.entries = {{m00, m01}, {m01, m11}};
  prog.sos.push_back(ct);
  ConicSolution sol = solve_conic(assemble_sdp(prog).conic);
  REQUIRE(sol.status == ConicStatus::kPrimalInfeasible);
}

TEST_CASE("an explicit factor degree enlarges the Gram basis") {
  Poly p = Poly::from_terms(1, {{{2}, 1.0}, {{0}, 1.0}});
  SynthesisProgram prog = one_constraint(AffinePoly(p), "pos");
  prog.sos[0].gram_degree = 2;
  SdpProblem sdp = assemble_sdp(prog);
  CHECK(sdp.grams[0].corner_degrees == std::vector<int>{2});
  CHECK(sdp.grams[0].side == 3);
  ConicSolution sol = solve_conic(sdp.conic);
  REQUIRE(sol.status == ConicStatus::kOptimal);
  auto M = certified_matrix(sdp, sol, "pos", 1);
  CHECK(max_coeff_gap(M[0][0], p) < 1e-6);
}

TEST_CASE("exported problems have stable bytes and round-trip exactly") {
  Poly fixed = Poly::from_terms(1, {{{2}, 1.0}, {{1}, -4.0}});
  MatrixXd jac = MatrixXd::Zero(MonomialTable::count(1, 2), 1);
  jac(0, 0) = 1.0;
  AffinePoly con = AffinePoly(fixed) + AffinePoly::decision("t", jac, 1, 2);
  SynthesisProgram prog;
  prog.blocks.push_back({"t", 1});
  prog.objective["t"] = 0.3 * VectorXd::Ones(1);
  prog.sos.push_back({"shifted", {{con}}});

  SdpProblem first = assemble_sdp(prog);
  SdpProblem second = assemble_sdp(prog);
  write_sdp(first, "sdp_a.txt");
  write_sdp(second, "sdp_b.txt");
  CHECK(slurp("sdp_a.txt") == slurp("sdp_b.txt"));

  SdpProblem back = read_sdp("sdp_a.txt");
  CHECK((back.conic.A - first.conic.A).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.conic.b - first.conic.b).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.conic.c - first.conic.c).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.obj_scale == first.obj_scale);
  CHECK(back.conic.cone.psd_dims == first.conic.cone.psd_dims);
  REQUIRE(back.grams.size() == first.grams.size());
  CHECK(back.grams[0].label == first.grams[0].label);
  write_sdp(back, "sdp_c.txt");
  CHECK(slurp("sdp_c.txt") == slurp("sdp_a.txt"));
  std::remove("sdp_a.txt");
  std::remove("sdp_b.txt");
  std::remove("sdp_c.txt");
}

TEST_CASE("synthesis programs compile into consistent cone problems") {
  ControlAffineSystem sys = make_example1();
  BasisDictionary dict(BasisKind::kMonomial, 2, 4, VectorXd::Constant(2, -5.0),
                       VectorXd::Constant(2, 5.0));
  GeneratorSet gens = symbolic_generators(dict, sys);

  OcpOptions opt;
  opt.norm = CostNorm::kL1;
  opt.domain = Box{VectorXd::Constant(2, -5.0), VectorXd::Constant(2, 5.0)};
  opt.excluded = Box{VectorXd::Constant(2, -0.1), VectorXd::Constant(2, 0.1)};
  SynthesisProgram prog = build_program(gens, opt);
  SdpProblem sdp = assemble_sdp(prog);

  CHECK(sdp.conic.cone.n_free == prog.total_dim());
  REQUIRE(sdp.grams.size() == prog.sos.size());
  for (std::size_t i = 0; i < sdp.grams.size(); ++i)
    CHECK(sdp.grams[i].label == prog.sos[i].label);
  for (int r = 0; r < sdp.conic.A.rows(); ++r)
    CHECK(sdp.conic.A.row(r).cwiseAbs().maxCoeff() ==
          doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sdp.conic.c.cwiseAbs().maxCoeff() == doctest::Approx(1.0));
  CHECK(sdp.metadata["rows"].get<int>() == sdp.conic.A.rows());

  OcpOptions l2 = opt;
  l2.norm = CostNorm::kL2;
  l2.input_bound = 10.0;
  SynthesisProgram prog2 = build_program(gens, l2);
  SdpProblem sdp2 = assemble_sdp(prog2);
  bool saw_energy = false, saw_bound = false;
  for (const auto& g : sdp2.grams) {
    if (g.label == "input_energy") {
      saw_energy = true;
      CHECK(g.entry_side == 2);
      // w spans the degree-4 dictionary, the a R^{-1} corner is affine, so
      // the factor bases have degrees 2 and 0.
      CHECK(g.corner_degrees == std::vector<int>{2, 0});
      CHECK(g.side == MonomialTable::count(2, 2) + 1);
    }
    if (g.label == "input_bound") {
      saw_bound = true;
      // M a(x) (x^T x)^4 has degree 9; its factor basis tops out at 4 while
      // the identity corner stays constant.
      CHECK(g.corner_degrees == std::vector<int>{4, 0});
      CHECK(g.side == MonomialTable::count(2, 4) + 1);
    }
  }
  CHECK(saw_energy);
  CHECK(saw_bound);
}
