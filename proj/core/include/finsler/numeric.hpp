// Shared numeric conventions: default tolerances, relative-difference
// helpers, numeric rank, seeded probe-point sampling.
#pragma once

#include "finsler/expr.hpp"

#include <Eigen/Dense>

#include <vector>

namespace finsler {

inline constexpr double kDefaultRelTol = 1e-6;   // numeric agreement, relative
inline constexpr double kDefaultAbsTol = 1e-9;   // absolute floor
inline constexpr double kRankRelTol = 1e-7;      // singular value cutoff factor
inline constexpr double kInvarianceTol = 1e-7;   // holonomy invariance residual

/// |a - b| scaled by the larger magnitude, floored so that exact zeros
/// compare as zero instead of 0/0.
double rel_diff(double a, double b);

/// |measured - reference| / max(1, |reference|).
double scaled_diff(double measured, double reference);

bool almost_equal(double a, double b, double rel = kDefaultRelTol,
                  double abs_floor = kDefaultAbsTol);

/// Count of singular values above rel_tol times the largest one.
int numeric_rank(const Eigen::MatrixXd& m, double rel_tol = kRankRelTol);

/// Seeded in-domain probe points: x uniform in the ball of radius x_radius
/// (shrunk toward the origin until the domain predicate holds), |y| uniform
/// in [y_min, y_max] with uniform direction.
std::vector<ChartPoint> sample_chart_points(int dim, const Expr& domain,
                                            int count, unsigned seed,
                                            double x_radius = 0.7,
                                            double y_min = 0.5,
                                            double y_max = 2.0);

}  // namespace finsler
