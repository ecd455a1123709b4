#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <nlohmann/json.hpp>

#include "densynth/poly.hpp"
#include "oracles.hpp"

using namespace densynth;

TEST_CASE("monomial table is graded-lex ordered") {
  // n=1, degree 2: [1, x, x^2]
  MonomialTable t1(1, 2);
  REQUIRE(t1.size() == 3);
  CHECK(t1.exponent(0) == MultiIndex{0});
  CHECK(t1.exponent(1) == MultiIndex{1});
  CHECK(t1.exponent(2) == MultiIndex{2});

  // n=2, degree 2: [1, x1, x2, x1^2, x1 x2, x2^2]
  MonomialTable t2(2, 2);
  REQUIRE(t2.size() == 6);
  CHECK(t2.exponent(0) == MultiIndex{0, 0});
  CHECK(t2.exponent(1) == MultiIndex{1, 0});
  CHECK(t2.exponent(2) == MultiIndex{0, 1});
  CHECK(t2.exponent(3) == MultiIndex{2, 0});
  CHECK(t2.exponent(4) == MultiIndex{1, 1});
  CHECK(t2.exponent(5) == MultiIndex{0, 2});
}

TEST_CASE("monomial table sizes match the binomial count") {
  for (int n = 1; n <= 3; ++n)
    for (int d = 0; d <= 6; ++d)
      CHECK(MonomialTable(n, d).size() == MonomialTable::count(n, d));
  CHECK(MonomialTable::count(2, 4) == 15);
  CHECK(MonomialTable::count(3, 8) == 165);
}

TEST_CASE("index_of inverts exponent") {
  MonomialTable t(3, 5);
  for (int k = 0; k < t.size(); ++k) CHECK(t.index_of(t.exponent(k)) == k);
  CHECK(t.index_of(MultiIndex{6, 0, 0}) == -1);
  CHECK(t.index_of(MultiIndex{1, 1}) == -1);
}

TEST_CASE("monomial evaluation matches direct powers") {
  MonomialTable t(2, 3);
  VectorXd x(2), vals;
  x << 1.5, -0.75;
  t.eval(x, vals);
  for (int k = 0; k < t.size(); ++k) {
    const auto& e = t.exponent(k);
    CHECK(vals[k] == doctest::Approx(std::pow(1.5, e[0]) * std::pow(-0.75, e[1]))
                         .epsilon(1e-14));
  }
}

TEST_CASE("polynomial product and sum agree with pointwise arithmetic") {
  auto gen = oracles::rng(7);
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  Poly p = x1 * x1 * x2 * 0.5 - x2 * 2.0 + Poly::constant(2, 3.0);
  Poly q = x1 * x2 + x1 * 0.25;
  Poly prod = p * q;
  Poly sum = p + q;
  Poly diff = p - q;
  for (int i = 0; i < 50; ++i) {
    VectorXd x = oracles::random_point(gen, 2, -2.0, 2.0);
    CHECK(prod.eval(x) == doctest::Approx(p.eval(x) * q.eval(x)).epsilon(1e-12));
    CHECK(sum.eval(x) == doctest::Approx(p.eval(x) + q.eval(x)).epsilon(1e-12));
    CHECK(diff.eval(x) == doctest::Approx(p.eval(x) - q.eval(x)).epsilon(1e-12));
  }
}

TEST_CASE("derivative matches central differences") {
  auto gen = oracles::rng(11);
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  Poly p = pow(x1, 3) * x2 - 2.0 * x1 * pow(x2, 2) + x1 * 4.0;
  Poly dp0 = p.derivative(0);
  Poly dp1 = p.derivative(1);
  for (int i = 0; i < 20; ++i) {
    VectorXd x = oracles::random_point(gen, 2, -1.5, 1.5);
    VectorXd g = oracles::fd_gradient([&](const VectorXd& y) { return p.eval(y); }, x);
    CHECK(dp0.eval(x) == doctest::Approx(g[0]).epsilon(1e-6));
    CHECK(dp1.eval(x) == doctest::Approx(g[1]).epsilon(1e-6));
  }
}

TEST_CASE("divergence of the benchmark cubic field") {
  // f1 = -x1 + x2, f2 = -0.5(x1 + x2) + 0.5 x1^2 x2  =>  div = -1.5 + 0.5 x1^2
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  Poly f1 = -1.0 * x1 + x2;
  Poly f2 = -0.5 * (x1 + x2) + 0.5 * x1 * x1 * x2;
  Poly div = divergence_of_field({f1, f2});
  CHECK(div.coeff({0, 0}) == doctest::Approx(-1.5));
  CHECK(div.coeff({2, 0}) == doctest::Approx(0.5));
  CHECK(div.trimmed().table().size() == MonomialTable::count(2, 2));
}

TEST_CASE("multiplication matrix reproduces the product") {
  auto gen = oracles::rng(3);
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  Poly b = 0.5 * x1 * x1 + x2 * x2;  // quadratic multiplier
  MatrixXd m = multiplication_matrix(b, 3);
  auto in = MonomialTable::get(2, 3);
  auto out = MonomialTable::get(2, 5);
  REQUIRE(m.rows() == out->size());
  REQUIRE(m.cols() == in->size());
  // Random coefficient vector: multiply via matrix and via Poly::operator*.
  std::uniform_real_distribution<double> dist(-1, 1);
  VectorXd coeffs(in->size());
  for (int k = 0; k < coeffs.size(); ++k) coeffs[k] = dist(gen);
  Poly p(2, 3);
  p.coeffs() = coeffs;
  VectorXd via_matrix = m * coeffs;
  Poly direct = b * p;
  for (int k = 0; k < out->size(); ++k)
    CHECK(via_matrix[k] == doctest::Approx(direct.coeffs()[k]).epsilon(1e-13));
}

TEST_CASE("embedding and trimming round trip") {
  Poly x1 = Poly::variable(2, 0);
  Poly p = x1 * x1 + Poly::constant(2, 1.0);
  Poly e = p.embedded(6);
  CHECK(e.degree() == 6);
  CHECK(e.trimmed().degree() == 2);
  auto gen = oracles::rng(5);
  for (int i = 0; i < 10; ++i) {
    VectorXd x = oracles::random_point(gen, 2, -3, 3);
    CHECK(e.eval(x) == doctest::Approx(p.eval(x)));
  }
}

TEST_CASE("pow composes repeated products") {
  Poly x1 = Poly::variable(1, 0);
  Poly b = x1 * x1 + Poly::constant(1, 1.0);
  Poly b3 = pow(b, 3);
  VectorXd x(1);
  x << 1.5;
  CHECK(b3.eval(x) == doctest::Approx(std::pow(1.5 * 1.5 + 1.0, 3)));
  CHECK(pow(b, 0).eval(x) == doctest::Approx(1.0));
}

TEST_CASE("json round trip preserves coefficients") {
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  Poly p = -1.38 * x1 * x2 + 0.5 * pow(x2, 2) - Poly::constant(2, 0.0063);
  nlohmann::json j = poly_to_json(p);
  CHECK(j["basis"]["kind"] == "monomial");
  Poly q = poly_from_json(j);
  REQUIRE(q.table().size() == p.table().size());
  for (int k = 0; k < p.table().size(); ++k)
    CHECK(q.coeffs()[k] == p.coeffs()[k]);
}

TEST_CASE("to_string renders signs and powers") {
  Poly x1 = Poly::variable(2, 0), x2 = Poly::variable(2, 1);
  Poly p = -1.38 * x1 * x2 + pow(x2, 2);
  CHECK(p.to_string() == "-1.38*x1*x2 + x2^2");
  CHECK(Poly::constant(2, 0.0).to_string() == "0");
}

TEST_CASE("set_coeff rejects exponents outside the table") {
  Poly p(2, 2);
  CHECK_THROWS_AS(p.set_coeff({3, 0}, 1.0), std::out_of_range);
}
