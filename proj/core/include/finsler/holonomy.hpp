// Holonomy machinery: invariance tests for candidate projective factors, Lie
// brackets of evaluable vector fields, and the numeric rank of the holonomy
// distribution by bracket closure at a point.
#pragma once

#include "finsler/geometry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace finsler {

/// Componentwise [X, Y]^a = X(Y^a) - Y(X^a), built symbolically so iterated
/// brackets remain evaluable.
VectorFieldTM lie_bracket(const VectorFieldTM& X, const VectorFieldTM& Y);

/// Pointwise surrogate for d_h P = 0: evaluates delta_i(P) at every sample.
struct InvarianceReport {
  double max_residual = 0.0;
  double tol = 0.0;
  bool passed = false;
  int samples = 0;
  std::string note;
};

InvarianceReport is_holonomy_invariant(const SprayGeometry& geo, const Expr& P,
                                       std::span<const ChartPoint> samples,
                                       double tol = kInvarianceTol);

/// Span of tangent vectors of T(TM) at a point, grown by bracket closure.
/// `provenance` records the bracket word that produced each kept vector.
struct DistributionSpan {
  ChartPoint point;
  std::vector<Eigen::VectorXd> vectors;
  std::vector<std::string> provenance;
  int rank = 0;
  double tol = 0.0;
  bool saturated = false;        // a full sweep added nothing
  bool depth_exhausted = false;  // stopped at max_depth: rank is a lower bound
};

/// Closure starting from seed fields; used directly by property tests that
/// replace the horizontal generators with linear combinations.
DistributionSpan holonomy_closure(std::vector<VectorFieldTM> generators,
                                  std::vector<std::string> names,
                                  const ChartPoint& p, int max_depth,
                                  double tol = kRankRelTol);

/// Closure from the horizontal frame delta_1..delta_n of the spray.
/// max_depth <= 0 selects the default 2n.
DistributionSpan holonomy_rank(const SprayGeometry& geo, const ChartPoint& p,
                               int max_depth = 0, double tol = kRankRelTol);

/// Derivatives of P along Phi(delta_j) and R(delta_j, delta_k): all must
/// vanish when P is holonomy invariant.
struct ImageInvarianceReport {
  double max_residual = 0.0;
  double tol = 0.0;
  bool passed = false;
};

ImageInvarianceReport curvature_image_invariance(const SprayGeometry& geo,
                                                 const Expr& P,
                                                 const ChartPoint& p,
                                                 double tol = kInvarianceTol);

/// X(E) for every vector in the span; a full-rank span with a nonconstant
/// candidate energy rules out metrizability at the point.
struct EnergyObstructionReport {
  std::vector<double> derivatives;
  double max_derivative = 0.0;
  bool full_rank = false;
  bool not_metrizable = false;
  double tol = 0.0;
};

EnergyObstructionReport energy_obstruction_test(const SprayGeometry& geo,
                                                const Expr& candidate_energy,
                                                const DistributionSpan& span,
                                                double tol = kInvarianceTol);

/// Candidate energy (a_i(x) y^i)^2 e^theta has a rank-1 fiber Hessian.
struct DegeneracyReport {
  Eigen::MatrixXd g;
  int rank = 0;
  bool rank_is_one = false;
};

DegeneracyReport linear_factor_degeneracy(std::span<const Expr> a,
                                          const Expr& theta,
                                          const ChartPoint& p);

/// Nonlinear invariant factor + admissible lambda => the deformed spray's
/// holonomy distribution has full rank 2n; combined with the energy
/// obstruction this certifies non-metrizability at the probe point.
struct FullRankReport {
  bool nonlinear_ok = false;
  bool lambda_ok = false;
  std::vector<double> bad_lambdas;
  double lambda_distance = 0.0;
  std::optional<DistributionSpan> span;  // set when both preconditions held
  bool full_rank = false;
  EnergyObstructionReport energy_obstruction;
  bool not_metrizable = false;
};

FullRankReport full_rank_obstruction(const SprayGeometry& base, const Expr& P,
                                     double lambda, const ChartPoint& p,
                                     int max_depth = 0,
                                     double lambda_margin = 1e-3);

}  // namespace finsler
