// Spectral theory of the Jacobi endomorphism: principal curvatures, the
// eigenvalue shift under holonomic deformation, the necessary metrizability
// condition and the exceptional set of deformation scalars.
#pragma once

#include "finsler/deform.hpp"
#include "finsler/geometry.hpp"

#include <string>
#include <vector>

namespace finsler {

/// Eigen data of Phi at a point. The fiber direction y is always an
/// eigenvector with eigenvalue zero; the remaining n-1 eigenvalues are the
/// principal curvatures.
struct SpectralData {
  Eigen::VectorXd eigenvalues;   // all n, ascending (real parts)
  Eigen::MatrixXd eigenvectors;  // unit columns matching eigenvalues
  int spray_index = 0;           // column carrying the distinguished zero
  std::vector<double> principal; // n-1 values, ascending
  double residual = 0.0;         // max ||Phi X - kappa X|| / scale
  bool complex_flag = false;     // some eigenvalue had a nonreal part
};

/// Matrix-level analysis (exposed for tests and the CLI).
SpectralData spectral_of_matrix(const Eigen::MatrixXd& phi,
                                const Eigen::VectorXd& y);

/// Principal curvatures of the spray at p. When a projective factor is
/// supplied, the non-spray eigenvectors are corrected into the adapted
/// horizontal span by X -> X - (d_J P(X)/P) S.
SpectralData principal_curvatures(const SprayGeometry& geo,
                                  const ChartPoint& p,
                                  const Expr* factor = nullptr);

/// kappa_alpha / F^2 over a set of points: constant iff the spread is small.
struct FlagConstancyReport {
  double kappa = 0.0;
  double spread = 0.0;
  double tol = 0.0;
  bool passed = false;
  std::vector<double> ratios;
};

FlagConstancyReport flag_constancy_check(const SprayGeometry& geo,
                                         std::span<const ChartPoint> points,
                                         double tol = 1e-5);

/// Sorted eigenvalues of Phi~ against the prediction {0} u {kappa_alpha +
/// lambda^2 P^2}.
struct ShiftReport {
  std::vector<double> measured;
  std::vector<double> predicted;
  double max_mismatch = 0.0;
  double tol = 0.0;
  bool passed = false;
};

ShiftReport eigen_shift_check(const DeformedSpray& d, const ChartPoint& p,
                              double tol = 1e-6);

/// P~^2 + kappa_alpha must vanish for some alpha if the deformation by P~ is
/// to be metrizable; non-negative principal curvatures exclude every
/// nontrivial factor.
struct NecessaryConditionReport {
  std::vector<double> residuals;  // P~^2 + kappa_alpha per alpha
  double best = 0.0;              // smallest |residual|
  bool satisfied = false;
  bool all_curvatures_nonnegative = false;
  std::string verdict;
  double tol = 0.0;
};

NecessaryConditionReport necessary_condition_check(const SprayGeometry& geo,
                                                   const Expr& Ptilde,
                                                   const ChartPoint& p,
                                                   double tol = 1e-6);

/// Solutions of kappa_i + lambda^2 P^2 = 0 at the point: the only scalars for
/// which the deformation could remain metrizable. A vanishing principal
/// curvature contributes lambda = 0, flagged as the trivial deformation.
struct BadLambdaSet {
  std::vector<double> values;  // ascending
  bool includes_trivial_zero = false;
};

BadLambdaSet bad_lambda_set(const SprayGeometry& geo, const Expr& P,
                            const ChartPoint& p);

}  // namespace finsler
