#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <vector>

#include "babbage/expression.hpp"
#include "babbage/polynomial.hpp"

using namespace babbage;

static Expression parse2(const std::string& s) {
  return parse_expression(s, make_vars({"x", "y"}));
}

TEST_CASE("canonicalization collects and cancels terms") {
  auto p = poly_canonical(parse2("(x + y)^2 - (x - y)^2"));
  REQUIRE(p.terms().size() == 1);
  CHECK(p.coefficient({1, 1}) == Rational(4));

  auto z = poly_canonical(parse2("x*y - y*x"));
  CHECK(z.is_zero());
}

TEST_CASE("family member i=2 has the frozen coefficients") {
  // x * (1-y) * (2-y)/2  ->  x - (3/2) x y + (1/2) x y^2
  auto p = poly_canonical(parse2("x*(1 - y)*((2 - y)/2)"));
  REQUIRE(p.terms().size() == 3);
  CHECK(p.coefficient({1, 0}) == Rational(1));
  CHECK(p.coefficient({1, 1}) == Rational(-3, 2));
  CHECK(p.coefficient({1, 2}) == Rational(1, 2));
  // frozen point value: p(2,3) = 2*(1-3)*(2-3)/2 = 2
  double pt[] = {2.0, 3.0};
  CHECK(p.eval(pt) == 2.0);
}

TEST_CASE("polynomial composition") {
  auto p = poly_canonical(parse2("x^2"));
  auto q = poly_canonical(parse2("x + 1"));
  auto idy = poly_canonical(parse2("y"));
  auto comp = p.compose({q, idy});
  CHECK(comp == poly_canonical(parse2("x^2 + 2*x + 1")));
}

TEST_CASE("composition degree cap throws instead of exploding") {
  auto p8 = poly_canonical(parse2("x^8"));
  auto idy = poly_canonical(parse2("y"));
  auto p64 = p8.compose({p8, idy});
  CHECK(p64.degree_in(0) == 64);
  CHECK_THROWS_AS(p64.compose({p8, idy}), DegreeCapError);
}

TEST_CASE("polynomial derivative matches hand computation") {
  auto p = poly_canonical(parse2("x - (3/2)*x*y + (1/2)*x*y^2"));
  auto dy = p.derivative(1);
  // d/dy = -(3/2) x + x y
  CHECK(dy.coefficient({1, 0}) == Rational(-3, 2));
  CHECK(dy.coefficient({1, 1}) == Rational(1));
  CHECK(dy.terms().size() == 2);
}

TEST_CASE("exact evaluation of polynomials") {
  auto p = poly_canonical(parse2("x^2*y - y/3"));
  CHECK(p.eval_exact({Rational(1, 2), Rational(3)}) == Rational(-1, 4));
}

TEST_CASE("float constants canonicalize as exact dyadics") {
  auto e = Expression(make_bin(BinOp::Mul, make_const_f(0.25), make_var(0)),
                      make_vars({"x"}));
  auto p = poly_canonical(e);
  CHECK(p.coefficient({1}) == Rational(1, 4));
}

TEST_CASE("polynomial recognition") {
  CHECK(is_polynomial(parse2("x^3*y - 7/3 + (x + y)^2")));
  CHECK(is_polynomial(parse2("x/4")));
  CHECK_FALSE(is_polynomial(parse2("exp(x)")));
  CHECK_FALSE(is_polynomial(parse2("piece(x <= 0 : 0 ; else : x)")));
  CHECK_FALSE(is_polynomial(parse2("1/x")));
  CHECK_FALSE(is_polynomial(parse2("abs(x)")));
}

TEST_CASE("division by a nonzero constant is polynomial, by a variable is not") {
  auto p = poly_canonical(parse2("(x + y)/2"));
  CHECK(p.coefficient({1, 0}) == Rational(1, 2));
  CHECK(p.coefficient({0, 1}) == Rational(1, 2));
}

TEST_CASE("expression round trip through canonical form") {
  auto vars = make_vars({"x", "y"});
  auto p = poly_canonical(parse2("1 - 2*x + x^2*y^3/5"));
  auto back = poly_canonical(p.to_expression(vars));
  CHECK(p == back);
}

TEST_CASE("composition canonicalizes into the substituted polynomial") {
  auto f = parse_expression("x^2 + 1", make_vars({"x"}));
  auto g = compose(f, {parse_expression("x - 1", make_vars({"x"}))});
  auto p = poly_canonical(g);
  CHECK(p == poly_canonical(parse_expression("x^2 - 2*x + 2", make_vars({"x"}))));
}
