// Holonomic projective deformations S~ = S - 2 lambda P C: deformed spray
// coefficients, projectors, Jacobi endomorphism (direct and closed form),
// adapted frames and the geodesic-level equivalence check.
#pragma once

#include "finsler/geometry.hpp"
#include "finsler/holonomy.hpp"

#include <string>
#include <vector>

namespace finsler {

/// Base spray plus the deformation data; the deformed coefficients
/// G~^i = G^i + lambda P y^i are symbolic like everything else.
struct DeformedSpray {
  Finsler base;
  Expr P;
  double lambda = 0.0;
  SprayGeometry base_geometry;
  SprayGeometry deformed_geometry;
};

struct DeformOptions {
  bool check_invariance = true;  // explicit override for experiments
  int samples = 10;
  unsigned seed = 42;
  double tol = kInvarianceTol;
};

/// Requires P to be 1-homogeneous, nonvanishing on the probe set and
/// holonomy invariant (unless overridden).
DeformedSpray deform_spray(const SprayGeometry& base, const Expr& P,
                           double lambda, const DeformOptions& opts = {});

/// Jacobi endomorphism of the deformed spray both ways: recomputed from the
/// deformed coefficients, and assembled from the closed form
/// Phi~ = Phi + lambda^2 (P^2 J - P d_J P (x) C). The Lie-derivative
/// residuals S(P) and d_J S(P) that the closed form relies on are reported.
struct JacobiPair {
  Eigen::MatrixXd direct;
  Eigen::MatrixXd closed_form;
  double discrepancy = 0.0;    // ||direct - closed|| / max(1, ||direct||)
  double ls_residual = 0.0;    // |S(P)|
  double djls_residual = 0.0;  // max_j |d/dy^j S(P)|
};

JacobiPair deformed_jacobi(const DeformedSpray& d, const ChartPoint& p);

/// Projectors of the deformed connection as 2n x 2n matrices acting on
/// (dx, dy) components; h + v = Id exactly by construction.
struct ProjectorPair {
  Eigen::MatrixXd h;
  Eigen::MatrixXd v;
  double idempotency_residual = 0.0;  // ||h^2 - h||
  double mixed_residual = 0.0;        // ||h v||
  double spray_residual = 0.0;        // ||h S~ - S~|| / ||S~||
};

ProjectorPair deformed_projectors(const DeformedSpray& d, const ChartPoint& p);

/// Independent construction of the horizontal projector from the spray's own
/// connection: h = (Id + [J, S]) / 2 with the bracket taken literally on the
/// coordinate frame.
Eigen::MatrixXd projector_from_connection(const SprayGeometry& geo,
                                          const ChartPoint& p);

/// Frame h_i = delta_i - (P_i/P) S, v_i = d/dy^i - (P_i/P) C adapted to a
/// projective factor; spans have rank n-1 and J maps one onto the other.
struct AdaptedFrame {
  std::vector<VectorFieldTM> h;
  std::vector<VectorFieldTM> v;
  VectorFieldTM S;
  VectorFieldTM C;
  Eigen::MatrixXd h_values;  // 2n x n, columns h_i at the probe point
  Eigen::MatrixXd v_values;
  int h_rank = 0;
  int v_rank = 0;
};

AdaptedFrame adapted_frames(const SprayGeometry& base, const Expr& P,
                            const ChartPoint& p);

/// Numeric verification of the adapted-frame properties at one point:
/// kernels, involutivity of the v_i span, infinitesimal symmetry of P,
/// rank jumps for C and S, and the vertical part of [h_i, v_j].
struct FrameCheck {
  std::string name;
  double measured = 0.0;
  double tol = 0.0;
  bool passed = false;
};

struct FrameCheckReport {
  std::vector<FrameCheck> checks;
  bool passed = false;
};

FrameCheckReport verify_adapted_frame(const SprayGeometry& base, const Expr& P,
                                      const ChartPoint& p, double tol = 1e-7);

/// Arc-length utilities shared by the trace comparison.
double polyline_length(const std::vector<Eigen::VectorXd>& pts);
std::vector<Eigen::VectorXd> resample_arclength(
    const std::vector<Eigen::VectorXd>& pts, int nodes,
    double length_cap = -1.0);

/// Symmetric max-min distance between two traces compared as point sets:
/// both are truncated to the shorter arc length and resampled first.
double trace_distance(const std::vector<Eigen::VectorXd>& a,
                      const std::vector<Eigen::VectorXd>& b, int nodes = 200);

/// Integrates the geodesics of S and S~ from one initial condition and
/// compares the traces as point sets.
struct EquivalenceReport {
  double distance = 0.0;
  double tol = 0.0;
  bool passed = false;
  bool base_completed = false;
  bool deformed_completed = false;
};

EquivalenceReport projective_equivalence_check(const DeformedSpray& d,
                                               const ChartPoint& start,
                                               double T, int steps,
                                               double tol = 1e-5);

}  // namespace finsler
