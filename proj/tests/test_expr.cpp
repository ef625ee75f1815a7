#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "finsler/expr.hpp"
#include "finsler/numeric.hpp"
#include "oracles.hpp"

#include <thread>

using namespace finsler;

namespace {

ChartPoint pt2(double x1, double x2, double y1, double y2) {
  Eigen::VectorXd x(2), y(2);
  x << x1, x2;
  y << y1, y2;
  return ChartPoint(x, y);
}

const char* kKleinF =
    "sqrt(((1 - dot(x,x))*dot(y,y) + dot(x,y)^2) / (1 - dot(x,x))^2)";

}  // namespace

TEST_CASE("parse expands dot sugar into coordinate sums") {
  Expr e = parse("sqrt(dot(y,y))", 2);
  Expr manual = sqrt(Expr::variable(Var::y(0), 2) * Expr::variable(Var::y(0), 2) +
                     Expr::variable(Var::y(1), 2) * Expr::variable(Var::y(1), 2));
  CHECK(e.identical(manual));
  CHECK(eval(e, pt2(0, 0, 3, 4)) == doctest::Approx(5.0));
}

TEST_CASE("parse builds the expected tree") {
  Expr e = parse("x[1]*y[2] - 3", 2);
  Expr manual = Expr::variable(Var::x(0), 2) * Expr::variable(Var::y(1), 2) -
                Expr::constant(3.0, 2);
  CHECK(e.identical(manual));
}

TEST_CASE("parse rejects out-of-range indices with the byte offset") {
  CHECK_THROWS_AS(parse("y[3]", 2), IndexError);
  try {
    parse("x[1] + y[3]", 2);
    FAIL("expected IndexError");
  } catch (const IndexError& err) {
    CHECK(err.offset == 9);  // position of the digit 3
  }
}

TEST_CASE("parse reports syntax errors with the byte offset") {
  try {
    parse("x[1] + * 2", 2);
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& err) {
    CHECK(err.offset == 7);
  }
  CHECK_THROWS_AS(parse("frob(x[1])", 2), SyntaxError);
  CHECK_THROWS_AS(parse("x[1] +", 2), SyntaxError);
  CHECK_THROWS_AS(parse("dot(x, x[1])", 2), SyntaxError);
}

TEST_CASE("differentiate produces exact symbolic partials") {
  Expr e = parse("x[1]*y[1]", 2);
  CHECK(differentiate(e, Var::y(0)).identical(Expr::variable(Var::x(0), 2)));
  CHECK(differentiate(parse("dot(y,y)", 2), Var::x(1)).is_zero());
}

TEST_CASE("derivative of the Euclidean norm matches finite differences") {
  Expr f = parse("sqrt(dot(y,y))", 2);
  Expr d = differentiate(f, Var::y(0));
  ChartPoint p = pt2(0, 0, 3, 4);
  CHECK(eval(d, p) == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(almost_equal(eval(d, p), oracles::fd_partial(f, p, Var::y(0)), 1e-5,
                     1e-6));
}

TEST_CASE("mixed partials commute as functions") {
  Expr f = parse(kKleinF, 2);
  Expr dxy = differentiate(differentiate(f, Var::x(0)), Var::y(1));
  Expr dyx = differentiate(differentiate(f, Var::y(1)), Var::x(0));
  ChartPoint p = pt2(0.3, -0.1, 0.8, 0.5);
  CHECK(eval(dxy, p) == doctest::Approx(eval(dyx, p)).epsilon(1e-10));
}

TEST_CASE("eval reports domain violations with the offending subexpression") {
  Expr f = parse(kKleinF, 2);
  CHECK(eval(f, pt2(0, 0, 3, 4)) == doctest::Approx(5.0));  // |y| at x = 0
  CHECK_THROWS_AS(eval(f, pt2(1.0, 0, 1, 0)), DomainError);
  CHECK_THROWS_AS(eval(parse("sqrt(x[1] - 2)", 2), pt2(0, 0, 1, 0)),
                  DomainError);
  CHECK_THROWS_AS(eval(parse("log(x[1])", 2), pt2(-1, 0, 1, 0)), DomainError);
  try {
    eval(parse("1/(x[1] - 1) + y[2]", 2), pt2(1, 0, 1, 0));
    FAIL("expected DomainError");
  } catch (const DomainError& err) {
    CHECK(err.subexpression.find("x[1] - 1") != std::string::npos);
  }
}

TEST_CASE("chart points live on the slit tangent bundle") {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd y = Eigen::VectorXd::Zero(2);
  CHECK_THROWS_AS(ChartPoint(x, y), std::invalid_argument);
}

TEST_CASE("evaluate_jet: order zero is eval") {
  Expr f = parse("x[1]*y[2] - 3", 2);
  ChartPoint p = pt2(2, 0, 1, 5);
  JetValue jet = evaluate_jet(f, p, 0);
  CHECK(jet.entries().size() == 1);
  CHECK(jet.value() == doctest::Approx(eval(f, p)));
}

TEST_CASE("evaluate_jet: flat energy has unit fiber Hessian") {
  Expr E = parse("dot(y,y)/2", 2);
  JetValue jet = evaluate_jet(E, pt2(0.4, 0.1, 1.2, -0.3), 2);
  const Var yy[] = {Var::y(0), Var::y(0)};
  CHECK(jet.entry(yy) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("evaluate_jet matches central finite differences on the Klein energy") {
  Expr F = parse(kKleinF, 2);
  Expr E = F.squared() / 2.0;
  ChartPoint p = pt2(0.3, 0, 1, 0);
  JetValue jet = evaluate_jet(E, p, 2);
  const Var yy[] = {Var::y(0), Var::y(0)};
  double fd = oracles::fd_second(E, p, Var::y(0));
  CHECK(rel_diff(jet.entry(yy), fd) < 1e-6);
}

TEST_CASE("jet entries are invariant under multi-index permutation") {
  Expr F = parse(kKleinF, 2);
  JetValue jet = evaluate_jet(F, pt2(0.2, 0.3, 0.9, -0.4), 2);
  // exact equality: one canonical entry backs every permutation
  CHECK(jet.entry({0, 3}) == jet.entry({3, 0}));
  CHECK(jet.entry({1, 2}) == jet.entry({2, 1}));
  CHECK_THROWS_AS(jet.entry({0, 1, 2}), std::out_of_range);
}

TEST_CASE("check_homogeneity accepts degree-1 norms and rejects the square") {
  std::vector<ChartPoint> samples = {pt2(0.1, 0.2, 1, 0.5),
                                     pt2(0.3, -0.2, -0.7, 1.1)};
  const double scales[] = {0.5, 2.0, 3.0};

  Expr euclid = parse("sqrt(dot(y,y))", 2);
  HomogeneityReport r = check_homogeneity(euclid, 1, samples, scales);
  CHECK(r.passed);
  CHECK(r.max_scale_error < 1e-12);

  Expr klein = parse(kKleinF, 2);
  CHECK(check_homogeneity(klein, 1, samples, scales).passed);

  Expr square = parse("dot(y,y)", 2);
  CHECK_FALSE(check_homogeneity(square, 1, samples, scales).passed);
  CHECK(check_homogeneity(square, 2, samples, scales).passed);
}

TEST_CASE("Euler identity holds to 1e-9 for homogeneous expressions") {
  std::vector<ChartPoint> samples;
  oracles::RandomExprGen gen(2, 7);
  for (int i = 0; i < 20; ++i) samples.push_back(gen.point());
  for (const char* src : {"sqrt(dot(y,y))", kKleinF, "y[1] + 2*y[2]"}) {
    Expr e = parse(src, 2);
    for (const ChartPoint& p : samples) {
      double base;
      try {
        base = eval(e, p);
      } catch (const DomainError&) {
        continue;
      }
      double radial = 0.0;
      for (int i = 0; i < 2; ++i)
        radial += p.y()[i] * eval(differentiate(e, Var::y(i)), p);
      CHECK(rel_diff(radial, base) < 1e-9);
    }
  }
}

TEST_CASE("symbolic derivatives of random trees agree with finite differences") {
  oracles::RandomExprGen gen(2, 20260808);
  int checked_points = 0;
  for (int t = 0; t < 12; ++t) {
    Expr e = gen.tree(6);
    std::vector<Expr> partials;
    for (int s = 0; s < 4; ++s)
      partials.push_back(differentiate(e, Var::from_slot(s, 2)));
    int points = 0;
    for (int k = 0; k < 400 && points < 100; ++k) {
      ChartPoint p = gen.point();
      double base;
      try {
        base = eval(e, p);
      } catch (const DomainError&) {
        continue;
      }
      if (std::abs(base) > 1e3) continue;
      ++points;
      ++checked_points;
      for (int s = 0; s < 4; ++s) {
        Var v = Var::from_slot(s, 2);
        double sym = eval(partials[s], p);
        double fd = oracles::fd_partial(e, p, v);
        CHECK_MESSAGE(almost_equal(sym, fd, 1e-5, 1e-6),
                      "tree=", e.str(), " var slot=", s, " sym=", sym,
                      " fd=", fd);
      }
    }
  }
  CHECK(checked_points >= 100);
}

TEST_CASE("immutable expressions evaluate identically across threads") {
  Expr F = parse(kKleinF, 2);
  ChartPoint p = pt2(0.25, -0.15, 1.1, 0.4);
  JetValue reference = evaluate_jet(F, p, 2);
  std::vector<std::map<JetValue::MultiIndex, double>> results(4);
  std::vector<std::thread> workers;
  for (int i = 0; i < 4; ++i)
    workers.emplace_back(
        [&, i] { results[i] = evaluate_jet(F, p, 2).entries(); });
  for (auto& w : workers) w.join();
  for (const auto& r : results) CHECK(r == reference.entries());
}
