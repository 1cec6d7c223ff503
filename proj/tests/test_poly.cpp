#include <doctest.h>

#include <cmath>
#include <random>

#include "ccm/poly.hpp"
#include "oracles.hpp"

using namespace ccm;

namespace {

Polynomial P(std::string_view text, std::size_t n = 2) {
  const auto names = default_variable_names(n);
  return parse_polynomial(text, names);
}

Polynomial random_poly(std::mt19937& rng, std::size_t nvars, int max_deg, int max_terms) {
  std::uniform_int_distribution<int> deg(0, max_deg);
  std::uniform_int_distribution<int> nterms(1, max_terms);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<std::size_t> var(0, nvars - 1);
  Polynomial p(nvars);
  const int count = nterms(rng);
  for (int t = 0; t < count; ++t) {
    std::vector<int> e(nvars, 0);
    const int d = deg(rng);
    for (int k = 0; k < d; ++k) e[var(rng)] += 1;
    // small integer-ish coefficients keep ring axioms exact
    p.add_term(Monomial(e), std::round(coef(rng) * 4.0) / 4.0);
  }
  return p;
}

}  // namespace

TEST_CASE("add: cancellation, identity, like terms") {
  CHECK(P("x1^2 + 1") + P("-1") == P("x1^2"));
  const Polynomial p = P("3*x1*x2 - x2^3 + 0.5");
  CHECK(p + Polynomial(2) == p);
  CHECK(P("2*x1*x2") + P("3*x1*x2") == P("5*x1*x2"));
  CHECK((P("x1") - P("x1")).is_zero());
  CHECK((P("x1") - P("x1")).size() == 0);
}

TEST_CASE("mul: products and identity") {
  CHECK(P("x1 + 1") * P("x1 - 1") == P("x1^2 - 1"));
  const Polynomial p = P("3*x1*x2 - x2^3 + 0.5");
  CHECK(p * Polynomial::constant(2, 1.0) == p);
  CHECK(P("x1 + x2").pow(2) == P("x1^2 + 2*x1*x2 + x2^2"));
  CHECK((P("x1 + 2") * P("x2^2 - x1")).degree() == 3);
}

TEST_CASE("arity mismatch is rejected") {
  CHECK_THROWS_AS(P("x1", 1) + P("x1", 2), std::invalid_argument);
  CHECK_THROWS_AS(P("x1", 1) * P("x1", 2), std::invalid_argument);
  const std::vector<double> pt{1.0};
  CHECK_THROWS_AS(P("x1", 2).eval(pt), std::invalid_argument);
}

TEST_CASE("eval") {
  const std::vector<double> two{2.0};
  CHECK(P("x1^2 + 1", 1).eval(two) == 5.0);
  const Polynomial p = P("3*x1*x2 - x2^3 + 0.5");
  const std::vector<double> zero{0.0, 0.0};
  CHECK(p.eval(zero) == 0.5);
}

TEST_CASE("jacobian of the surge model vector field") {
  const std::vector<std::string> names{"phi", "psi"};
  const PolyMatrix f = PolyMatrix::column({parse_polynomial("-psi - 3/2*phi^2 - 1/2*phi^3", names),
                                           parse_polynomial("phi", names)});
  const PolyMatrix a = jacobian(f);
  CHECK(a(0, 0) == parse_polynomial("-3*phi - 1.5*phi^2", names));
  CHECK(a(0, 1) == Polynomial::constant(2, -1.0));
  CHECK(a(1, 0) == Polynomial::constant(2, 1.0));
  CHECK(a(1, 1).is_zero());

  const PolyMatrix c = jacobian(PolyMatrix::column({P("7"), P("-2")}));
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) CHECK(c(i, j).is_zero());
  }
  const PolyMatrix swap = jacobian(PolyMatrix::column({P("x2"), P("x1")}));
  CHECK(swap.eval(std::vector<double>{0.3, -4.0}) == Eigen::Matrix2d{{0.0, 1.0}, {1.0, 0.0}});
  CHECK(swap.is_symmetric());
  CHECK_THROWS(jacobian(PolyMatrix(2, 2, 2)));
}

TEST_CASE("line_integral_unit: constant, quadratic, degenerate path") {
  const std::vector<double> a{0.7, -1.2};
  const std::vector<double> b{2.5, 0.3};
  CHECK(line_integral_unit(P("4.25"), a, b) == doctest::Approx(4.25).epsilon(1e-15));

  // x1^2 along a + s*b: a^2 + a*delta + delta^2/3; value frozen from the Simpson oracle
  const Polynomial sq = P("x1^2");
  const double simpson = oracle::simpson([&](double s) {
    const std::vector<double> pt{a[0] + s * b[0], a[1] + s * b[1]};
    return sq.eval(pt);
  });
  const double closed = a[0] * a[0] + a[0] * b[0] + b[0] * b[0] / 3.0;
  CHECK(std::abs(simpson - closed) < 1e-10);
  CHECK(std::abs(line_integral_unit(sq, a, b) - simpson) < 1e-10);

  const Polynomial p = P("3*x1*x2 - x2^3 + 0.5");
  const std::vector<double> zero{0.0, 0.0};
  CHECK(line_integral_unit(p, a, zero) == doctest::Approx(p.eval(a)).epsilon(1e-14));
}

TEST_CASE("text format round trip and errors") {
  const std::vector<std::string> names{"phi", "psi"};
  const Polynomial p = parse_polynomial("-psi - 1.5*phi^2 - 0.5*phi^3 + 0.1", names);
  CHECK(to_string(p, names) == "-0.5*phi^3 - 1.5*phi^2 - psi + 0.1");
  CHECK(to_string(Polynomial(3)) == "0");

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int trial = 0; trial < 50; ++trial) {
    Polynomial q(2);
    q.add_term(Monomial({trial % 4, 1}), u(rng) / 7.0);
    q.add_term(Monomial({0, 0}), u(rng) * 1e-9);
    q.add_term(Monomial({2, 3}), -u(rng) * 1e7);
    CHECK(parse_polynomial(to_string(q, names), names) == q);
  }

  try {
    (void)parse_polynomial("x1 + * x2", default_variable_names(2));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.column() == 6);
  }
  CHECK_THROWS_AS((void)parse_polynomial("x3", default_variable_names(2)), ParseError);
  CHECK_THROWS_AS((void)parse_polynomial("(x1 + 2", default_variable_names(2)), ParseError);
  CHECK_THROWS_AS((void)parse_polynomial("x1 / x2", default_variable_names(2)), ParseError);
  CHECK_THROWS_AS((void)parse_polynomial("", default_variable_names(2)), ParseError);
}

TEST_CASE("property: ring axioms on random polynomials") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    const Polynomial p = random_poly(rng, 3, 3, 4);
    const Polynomial q = random_poly(rng, 3, 3, 4);
    const Polynomial r = random_poly(rng, 3, 2, 3);
    CHECK(p + q == q + p);
    CHECK(p * q == q * p);
    CHECK((p + q) + r == p + (q + r));
    CHECK((p * q) * r == p * (q * r));
    CHECK(p * (q + r) == p * q + p * r);
  }
}

TEST_CASE("property: derivative agrees with central differences") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> x(-1.5, 1.5);
  for (int trial = 0; trial < 100; ++trial) {
    const Polynomial p = random_poly(rng, 3, 4, 6);
    std::vector<double> pt{x(rng), x(rng), x(rng)};
    for (std::size_t j = 0; j < 3; ++j) {
      const double h = 1e-5;
      auto plus = pt;
      auto minus = pt;
      plus[j] += h;
      minus[j] -= h;
      const double fd = (p.eval(plus) - p.eval(minus)) / (2 * h);
      const double exact = p.derivative(j).eval(pt);
      CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST_CASE("property: line integral matches adaptive quadrature") {
  std::mt19937 rng(99);
  std::uniform_real_distribution<double> x(-2.0, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 3);
    const Polynomial p = random_poly(rng, n, 4, 6);
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = x(rng);
      b[i] = x(rng);
    }
    const double quad = oracle::adaptive_simpson(
        [&](double s) {
          std::vector<double> pt(n);
          for (std::size_t i = 0; i < n; ++i) pt[i] = a[i] + s * b[i];
          return p.eval(pt);
        },
        0.0, 1.0, 1e-13);
    CHECK(std::abs(line_integral_unit(p, a, b) - quad) <= 1e-9);
  }
}

TEST_CASE("monomial enumeration in graded order") {
  const auto ms = monomials_up_to(2, 2);
  REQUIRE(ms.size() == 6);
  CHECK(ms[0] == Monomial({0, 0}));
  CHECK(ms[1] == Monomial({1, 0}));
  CHECK(ms[2] == Monomial({0, 1}));
  CHECK(ms[3] == Monomial({2, 0}));
  CHECK(monomials_up_to(3, 3, 3).size() == 10);
}
