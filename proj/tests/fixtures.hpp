// Shared metric fixtures for the test suites.
#pragma once

#include "finsler/geometry.hpp"

#include <cstdio>
#include <initializer_list>

namespace fixtures {

inline finsler::Finsler euclidean(int n = 2) {
  return {finsler::parse("sqrt(dot(y,y))", n),
          finsler::Expr::constant(1.0, n)};
}

inline finsler::Finsler klein(int n = 2) {
  return {finsler::parse(
              "sqrt(((1 - dot(x,x))*dot(y,y) + dot(x,y)^2) / (1 - dot(x,x))^2)",
              n),
          finsler::parse("1 - dot(x,x)", n)};
}

inline finsler::Finsler mu_family(double mu, int n = 2) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "sqrt(((1 - %.17g*dot(x,x))*dot(y,y) + %.17g*dot(x,y)^2) / "
                "(1 - %.17g*dot(x,x))^2)",
                mu, mu, mu);
  char dom[64];
  std::snprintf(dom, sizeof(dom), "1 - %.17g*dot(x,x)", mu);
  return {finsler::parse(buf, n), finsler::parse(dom, n)};
}

inline finsler::ChartPoint pt(std::initializer_list<double> xs,
                              std::initializer_list<double> ys) {
  Eigen::VectorXd x(static_cast<int>(xs.size()));
  Eigen::VectorXd y(static_cast<int>(ys.size()));
  int i = 0;
  for (double v : xs) x[i++] = v;
  i = 0;
  for (double v : ys) y[i++] = v;
  return finsler::ChartPoint(x, y);
}

}  // namespace fixtures
