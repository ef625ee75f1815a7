#include "finsler/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace finsler {

double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12});
}

double scaled_diff(double measured, double reference) {
  return std::abs(measured - reference) / std::max(1.0, std::abs(reference));
}

bool almost_equal(double a, double b, double rel, double abs_floor) {
  return std::abs(a - b) <=
         std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

int numeric_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.rows() == 0 || m.cols() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rel_tol * sv(0)) ++rank;
  return rank;
}

std::vector<ChartPoint> sample_chart_points(int dim, const Expr& domain,
                                            int count, unsigned seed,
                                            double x_radius, double y_min,
                                            double y_max) {
  if (dim < 1) throw std::invalid_argument("dimension must be positive");
  std::mt19937 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto ball_point = [&](double radius) {
    Eigen::VectorXd v(dim);
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
    double norm = v.norm();
    if (norm == 0.0) return Eigen::VectorXd(Eigen::VectorXd::Zero(dim));
    double r = radius * std::pow(unit(rng), 1.0 / dim);
    return Eigen::VectorXd(v * (r / norm));
  };
  auto sphere_point = [&](double radius) {
    Eigen::VectorXd v(dim);
    double norm = 0.0;
    do {
      for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
      norm = v.norm();
    } while (norm < 1e-12);
    return Eigen::VectorXd(v * (radius / norm));
  };

  std::vector<ChartPoint> points;
  points.reserve(count);
  while (static_cast<int>(points.size()) < count) {
    double radius = x_radius;
    bool found = false;
    for (int attempt = 0; attempt < 64 && !found; ++attempt) {
      Eigen::VectorXd x = ball_point(radius);
      double speed = y_min + (y_max - y_min) * unit(rng);
      Eigen::VectorXd y = sphere_point(speed);
      ChartPoint p(x, y);
      try {
        if (eval(domain, p) > 0.0) {
          points.push_back(std::move(p));
          found = true;
        }
      } catch (const DomainError&) {
        // predicate itself undefined here; shrink and retry
      }
      radius *= 0.8;
    }
    if (!found)
      throw DomainError("could not sample a point inside the domain",
                        domain.str());
  }
  return points;
}

}  // namespace finsler
