// Spray geometry of a Finsler function: metric tensor, geodesic spray via the
// Euler-Lagrange equation, nonlinear connection, curvature, Jacobi
// endomorphism, horizontal frame and geodesic integration.
#pragma once

#include "finsler/expr.hpp"
#include "finsler/numeric.hpp"

#include <Eigen/Dense>

#include <memory>
#include <vector>

namespace finsler {

/// A Finsler function together with its domain predicate (in-domain means
/// domain(x, y) > 0 and y != 0).
struct Finsler {
  Expr F;
  Expr domain;

  int dim() const { return F.dim(); }
};

bool in_domain(const Expr& domain, const ChartPoint& p);
void require_in_domain(const Expr& domain, const ChartPoint& p);

/// Energy E = F^2 / 2. Verifies that F is 1-homogeneous at seeded probe
/// points and throws ExprError if it is not.
Expr energy(const Finsler& f);

struct MetricValue {
  Eigen::MatrixXd g;  // g_ij = d^2 E / dy^i dy^j
  int rank = 0;
  bool regular = false;
};

MetricValue metric_tensor(const Finsler& f, const ChartPoint& p);

/// Metric tensor of an arbitrary candidate energy (no regularity demanded;
/// used for degeneracy arguments).
MetricValue metric_tensor_of_energy(const Expr& E, const ChartPoint& p);

/// Pointwise spray data: the coefficients and every derivative the
/// connection and curvature formulas consume.
struct SprayJet {
  Eigen::VectorXd G;                 // G^i
  Eigen::MatrixXd Gy;                // Gy(i,j)     = dG^i/dy^j
  std::vector<Eigen::MatrixXd> Gyy;  // Gyy[i](j,k) = d^2 G^i/dy^j dy^k
  Eigen::MatrixXd Gx;                // Gx(i,j)     = dG^i/dx^j
  std::vector<Eigen::MatrixXd> Gyx;  // Gyx[i](j,k) = d^2 G^i/dy^j dx^k
};

/// Largest relative residual of the Euler homogeneity chain at y:
/// Gy y = 2 G (2-homogeneity of G) and Gyy[i] y = row i of Gy.
double spray_homogeneity_residual(const SprayJet& jet,
                                  const Eigen::VectorXd& y);

/// Curvature R^i_jk of the nonlinear connection; stored so the antisymmetry
/// in (j,k) is exact.
struct CurvatureValue {
  std::vector<Eigen::MatrixXd> R;  // R[i](j,k)
  double at(int i, int j, int k) const { return R[i](j, k); }
  double max_abs() const;
};

/// Evaluable vector field on TM: a^i d/dx^i + b^i d/dy^i with symbolic
/// components, so iterated derivations stay exact.
struct VectorFieldTM {
  std::vector<Expr> a;
  std::vector<Expr> b;

  int dim() const { return static_cast<int>(a.size()); }
  /// Directional derivative X(f), symbolic.
  Expr apply(const Expr& f) const;
  /// Components (a^1..a^n, b^1..b^n) at a point.
  Eigen::VectorXd value(const ChartPoint& p) const;

  static VectorFieldTM zero(int dim);
};

struct GeodesicPath {
  std::vector<Eigen::VectorXd> x;  // base points
  std::vector<Eigen::VectorXd> y;  // velocities
  std::vector<double> t;
  bool completed = false;
  int exit_index = 0;  // first step index that left the domain; x.size() if completed
};

/// A spray on a chart: the coefficients G^i as symbolic expressions plus all
/// quantities derived from them. Built either from a Finsler function (the
/// geodesic spray, via i_S dd_J E = -dE) or from raw coefficients (for
/// example a projective deformation).
class SprayGeometry {
 public:
  static SprayGeometry geodesic(const Finsler& f);
  static SprayGeometry from_coefficients(std::vector<Expr> G, Expr domain);

  int dim() const;
  const Expr& domain() const;

  bool has_finsler() const;
  const Finsler& finsler() const;  // pre: has_finsler()
  const Expr& energy() const;      // pre: has_finsler()

  const std::vector<Expr>& spray_coefficients() const;  // G^i
  Eigen::VectorXd spray_values(const ChartPoint& p) const;

  SprayJet jet(const ChartPoint& p) const;
  CurvatureValue curvature(const ChartPoint& p) const;

  /// Jacobi endomorphism Phi^i_j = 2 dG^i/dx^j - S(G^i_j) - G^i_k G^k_j.
  Eigen::MatrixXd jacobi(const ChartPoint& p) const;
  /// Independent route Phi^i_j = y^k R^i_kj for cross-checking.
  Eigen::MatrixXd jacobi_from_curvature(const ChartPoint& p) const;

  std::vector<VectorFieldTM> horizontal_frame() const;  // delta_1..delta_n
  VectorFieldTM spray_field() const;                    // S
  VectorFieldTM liouville_field() const;                // C

  /// Fixed-step classical RK4 on (x', y') = (y, -2G). Aborts with a partial
  /// path when the trajectory leaves the domain.
  GeodesicPath integrate_geodesic(const ChartPoint& start, double T,
                                  int steps) const;

 private:
  struct Data;
  explicit SprayGeometry(std::shared_ptr<const Data> data);
  std::shared_ptr<const Data> data_;
};

}  // namespace finsler
